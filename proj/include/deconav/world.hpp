#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "deconav/frame.hpp"
#include "deconav/rng.hpp"
#include "deconav/vecmath.hpp"

namespace deconav {

enum class Action { MoveForward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };

constexpr double kStepMeters = 0.25;
constexpr double kTurnDegrees = 15.0;
constexpr int kActionCount = 4;

std::string action_name(Action a);
Action action_from_name(const std::string& name);

struct Landmark {
  int id = 0;
  int category = 0;
  int col = 0;
  int row = 0;
};

struct WorldGenParams {
  int width_cells = 64;
  int height_cells = 64;
  double cell_size = 0.25;  // meters
  int room_count = 9;
  int corridor_width = 2;  // cells
  int landmark_count = 24;
  int category_count = 16;
  double fov_degrees = 90.0;
  double view_range = 3.0;      // meters
  double success_radius = 3.0;  // meters
  int embedding_dim = 64;

  void validate() const;
};

struct ActuationNoise {
  bool enabled = false;
  double distance_jitter = 0.2;  // relative, symmetric around zero
  double rotation_jitter = 3.0;  // degrees, symmetric around zero
  std::uint64_t rng_seed = 0;
};

/// Immutable occupancy-grid world with landmarks and a shared random
/// projection used to synthesize observation and instruction embeddings.
/// Free-space topology is fixed after construction, so one instance can be
/// shared across any number of concurrent rollouts.
class GridWorld {
 public:
  GridWorld(WorldGenParams params, std::uint64_t seed,
            std::vector<bool> occupancy, std::vector<Landmark> landmarks);

  int width() const { return params_.width_cells; }
  int height() const { return params_.height_cells; }
  double cell_size() const { return params_.cell_size; }
  std::uint64_t seed() const { return seed_; }
  const WorldGenParams& params() const { return params_; }
  const std::vector<Landmark>& landmarks() const { return landmarks_; }
  const std::vector<bool>& occupancy() const { return occupancy_; }

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width() && row >= 0 && row < height();
  }
  /// Out-of-bounds cells count as blocked.
  bool blocked(int col, int row) const {
    return !in_bounds(col, row) || occupancy_[static_cast<std::size_t>(row) * width() + col];
  }
  bool blocked_at(Vec2 p) const;

  int cell_index(int col, int row) const { return row * width() + col; }
  /// Cell containing a point; throws if the point is out of bounds.
  std::pair<int, int> cell_of(Vec2 p) const;
  Vec2 cell_center(int col, int row) const {
    return {(col + 0.5) * cell_size(), (row + 0.5) * cell_size()};
  }

  const Landmark& landmark_by_id(int id) const;
  bool has_landmark(int id) const;

  /// Row-major embedding projection, embedding_dim x (category_count + 2).
  const std::vector<double>& projection() const { return projection_; }

  /// Straight-line visibility test on the grid (sampled raycast).
  bool line_of_sight(Vec2 a, Vec2 b) const;

 private:
  WorldGenParams params_;
  std::uint64_t seed_ = 0;
  std::vector<bool> occupancy_;  // true = blocked, row-major
  std::vector<Landmark> landmarks_;
  std::vector<double> projection_;
};

/// Generates a connected rooms-and-corridors world. Deterministic for a fixed
/// (seed, params) pair; throws std::runtime_error if the connectivity target
/// cannot be met after bounded retries.
GridWorld generate_world(std::uint64_t seed, const WorldGenParams& params);

/// One simulation step. MOVE_FORWARD translates kStepMeters along the heading
/// unless the target point is blocked (no slide, state unchanged); turns
/// rotate by kTurnDegrees; STOP leaves the state unchanged. Noise jitters
/// distance and rotation when enabled and an Rng is supplied.
AgentState step(const GridWorld& world, const AgentState& state, Action action,
                const ActuationNoise& noise, Rng* rng = nullptr);

/// Shortest-path distances from a set of source cells over the 8-connected
/// free-cell graph. Straight edges cost cell_size, diagonal edges
/// sqrt(2)*cell_size. Distances are accumulated as exact (straight, diagonal)
/// step counts and converted once, so equal geodesics compare bit-equal.
class DistanceField {
 public:
  static DistanceField from_point(const GridWorld& world, Vec2 source);
  static DistanceField from_points(const GridWorld& world,
                                   std::span<const Vec2> sources);

  /// Geodesic distance from the nearest source to the cell containing p.
  /// +infinity if unreachable; throws if p is blocked or out of bounds.
  double at(const GridWorld& world, Vec2 p) const;

  /// Index (into the source list) of the closest source for the cell
  /// containing p; ties resolve to the lowest index. -1 if unreachable.
  int owner_at(const GridWorld& world, Vec2 p) const;

  double at_cell(int cell_index) const { return dist_[cell_index]; }

 private:
  std::vector<double> dist_;
  std::vector<int> owner_;
};

/// Geodesic distance between two free points (endpoints snapped to their
/// containing cells). +infinity if the points are disconnected; throws
/// std::invalid_argument if either point is blocked or out of bounds.
double geodesic_distance(const GridWorld& world, Vec2 a, Vec2 b);

/// Geometric reference path from start to a goal point: a state per grid cell
/// along a shortest 8-connected route, headings facing the next waypoint.
/// Returns {start} when the goal is already within the success radius.
/// Throws std::runtime_error if the goal is unreachable.
std::vector<AgentState> shortest_path(const GridWorld& world,
                                      const AgentState& start, Vec2 goal);

/// Synthesizes the egocentric observation at a state: landmarks visible
/// within the field of view, range and line of sight contribute their
/// one-hot category weighted by 1/(1+distance); two scalar slots carry the
/// blocked fraction of the view cone and the normalized heading. The stacked
/// vector is projected and normalized to a unit embedding.
Frame observe(const GridWorld& world, const AgentState& state, int t);

/// Unit instruction embedding: waypoint categories stacked one-hot with
/// positional decay 0.9^k, then passed through the same projection as
/// observe. Throws on an empty list or an unknown landmark id.
std::vector<double> instruction_embedding(const GridWorld& world,
                                          std::span<const int> waypoint_ids);

}  // namespace deconav
