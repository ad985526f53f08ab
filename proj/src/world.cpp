#include "deconav/world.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace deconav {
namespace {

// Neighbor order is part of the deterministic contract: E, W, N, S first,
// then the four diagonals.
constexpr int kNeighborCol[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kNeighborRow[8] = {0, 0, 1, -1, 1, -1, 1, -1};

struct CellCost {
  int straight = 0;
  int diagonal = 0;
};

double canonical_distance(const CellCost& c, double cell_size) {
  return (static_cast<double>(c.straight) +
          static_cast<double>(c.diagonal) * M_SQRT2) *
         cell_size;
}

std::vector<int> component_labels(const GridWorld& w, int& component_count) {
  const int n = w.width() * w.height();
  std::vector<int> label(n, -1);
  component_count = 0;
  std::vector<int> stack;
  for (int row = 0; row < w.height(); ++row) {
    for (int col = 0; col < w.width(); ++col) {
      if (w.blocked(col, row) || label[w.cell_index(col, row)] >= 0) continue;
      stack.push_back(w.cell_index(col, row));
      label[stack.back()] = component_count;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int ccol = cur % w.width();
        const int crow = cur / w.width();
        for (int k = 0; k < 8; ++k) {
          const int nc = ccol + kNeighborCol[k];
          const int nr = crow + kNeighborRow[k];
          if (w.blocked(nc, nr)) continue;
          const int idx = w.cell_index(nc, nr);
          if (label[idx] < 0) {
            label[idx] = component_count;
            stack.push_back(idx);
          }
        }
      }
      ++component_count;
    }
  }
  return label;
}

std::vector<int> main_component_cells(const GridWorld& w) {
  int count = 0;
  std::vector<int> label = component_labels(w, count);
  std::vector<int> sizes(count, 0);
  for (int l : label)
    if (l >= 0) ++sizes[l];
  const int best =
      count == 0
          ? -1
          : static_cast<int>(std::max_element(sizes.begin(), sizes.end()) -
                             sizes.begin());
  std::vector<int> cells;
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] == best) cells.push_back(static_cast<int>(i));
  return cells;
}

}  // namespace

std::string action_name(Action a) {
  switch (a) {
    case Action::MoveForward: return "MOVE_FORWARD";
    case Action::TurnLeft: return "TURN_LEFT";
    case Action::TurnRight: return "TURN_RIGHT";
    case Action::Stop: return "STOP";
  }
  throw std::logic_error("action_name: bad action");
}

Action action_from_name(const std::string& name) {
  if (name == "MOVE_FORWARD") return Action::MoveForward;
  if (name == "TURN_LEFT") return Action::TurnLeft;
  if (name == "TURN_RIGHT") return Action::TurnRight;
  if (name == "STOP") return Action::Stop;
  throw std::invalid_argument("action_from_name: unknown action " + name);
}

void WorldGenParams::validate() const {
  if (width_cells < 8 || height_cells < 8)
    throw std::invalid_argument("WorldGenParams: grid too small");
  if (cell_size <= 0.0) throw std::invalid_argument("WorldGenParams: cell_size must be > 0");
  if (room_count < 1) throw std::invalid_argument("WorldGenParams: room_count must be >= 1");
  if (corridor_width < 1)
    throw std::invalid_argument("WorldGenParams: corridor_width must be >= 1");
  if (landmark_count < 0)
    throw std::invalid_argument("WorldGenParams: landmark_count must be >= 0");
  if (category_count < 1)
    throw std::invalid_argument("WorldGenParams: category_count must be >= 1");
  if (fov_degrees <= 0.0 || fov_degrees > 360.0)
    throw std::invalid_argument("WorldGenParams: fov_degrees must be in (0, 360]");
  if (view_range <= 0.0) throw std::invalid_argument("WorldGenParams: view_range must be > 0");
  if (success_radius <= 0.0)
    throw std::invalid_argument("WorldGenParams: success_radius must be > 0");
  if (embedding_dim < 2)
    throw std::invalid_argument("WorldGenParams: embedding_dim must be >= 2");
}

GridWorld::GridWorld(WorldGenParams params, std::uint64_t seed,
                     std::vector<bool> occupancy, std::vector<Landmark> landmarks)
    : params_(params), seed_(seed), occupancy_(std::move(occupancy)),
      landmarks_(std::move(landmarks)) {
  params_.validate();
  if (occupancy_.size() !=
      static_cast<std::size_t>(params_.width_cells) * params_.height_cells)
    throw std::invalid_argument("GridWorld: occupancy size mismatch");
  for (const Landmark& lm : landmarks_) {
    if (blocked(lm.col, lm.row))
      throw std::invalid_argument("GridWorld: landmark on blocked cell");
    if (lm.category < 0 || lm.category >= params_.category_count)
      throw std::invalid_argument("GridWorld: landmark category out of range");
  }
  for (std::size_t i = 0; i < landmarks_.size(); ++i)
    for (std::size_t j = i + 1; j < landmarks_.size(); ++j)
      if (landmarks_[i].id == landmarks_[j].id)
        throw std::invalid_argument("GridWorld: duplicate landmark id");

  const int feat = params_.category_count + 2;
  Rng proj_rng(derive_seed(seed_, "projection"));
  projection_.resize(static_cast<std::size_t>(params_.embedding_dim) * feat);
  for (double& x : projection_) x = proj_rng.normal();
}

bool GridWorld::blocked_at(Vec2 p) const {
  const int col = static_cast<int>(std::floor(p.x / cell_size()));
  const int row = static_cast<int>(std::floor(p.y / cell_size()));
  return blocked(col, row);
}

std::pair<int, int> GridWorld::cell_of(Vec2 p) const {
  const int col = static_cast<int>(std::floor(p.x / cell_size()));
  const int row = static_cast<int>(std::floor(p.y / cell_size()));
  if (!in_bounds(col, row))
    throw std::invalid_argument("GridWorld::cell_of: point out of bounds");
  return {col, row};
}

const Landmark& GridWorld::landmark_by_id(int id) const {
  for (const Landmark& lm : landmarks_)
    if (lm.id == id) return lm;
  throw std::invalid_argument("GridWorld: unknown landmark id " + std::to_string(id));
}

bool GridWorld::has_landmark(int id) const {
  for (const Landmark& lm : landmarks_)
    if (lm.id == id) return true;
  return false;
}

bool GridWorld::line_of_sight(Vec2 a, Vec2 b) const {
  const double len = distance(a, b);
  if (len < 1e-12) return true;
  const double step_len = cell_size() / 8.0;
  const int steps = static_cast<int>(std::ceil(len / step_len));
  for (int i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const Vec2 p{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
    if (blocked_at(p)) return false;
  }
  return true;
}

GridWorld generate_world(std::uint64_t seed, const WorldGenParams& params) {
  params.validate();
  const int w = params.width_cells;
  const int h = params.height_cells;

  constexpr int kMaxAttempts = 20;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, "worldgen", static_cast<std::uint64_t>(attempt)));
    std::vector<bool> occ(static_cast<std::size_t>(w) * h, true);

    auto carve = [&](int c0, int r0, int c1, int r1) {
      c0 = std::clamp(c0, 1, w - 2);
      c1 = std::clamp(c1, 1, w - 2);
      r0 = std::clamp(r0, 1, h - 2);
      r1 = std::clamp(r1, 1, h - 2);
      for (int r = std::min(r0, r1); r <= std::max(r0, r1); ++r)
        for (int c = std::min(c0, c1); c <= std::max(c0, c1); ++c)
          occ[static_cast<std::size_t>(r) * w + c] = false;
    };

    const int min_side = 5;
    const int max_side = std::max(min_side + 1, std::min(w, h) / 4);
    std::vector<std::pair<int, int>> centers;
    for (int i = 0; i < params.room_count; ++i) {
      const int rw = rng.uniform_int(min_side, max_side);
      const int rh = rng.uniform_int(min_side, max_side);
      const int c0 = rng.uniform_int(1, std::max(1, w - 2 - rw));
      const int r0 = rng.uniform_int(1, std::max(1, h - 2 - rh));
      carve(c0, r0, c0 + rw - 1, r0 + rh - 1);
      centers.emplace_back(c0 + rw / 2, r0 + rh / 2);
    }
    const int cw = params.corridor_width;
    for (std::size_t i = 1; i < centers.size(); ++i) {
      const auto [c0, r0] = centers[i - 1];
      const auto [c1, r1] = centers[i];
      if (rng.next_below(2) == 0) {
        carve(c0, r0, c1, r0 + cw - 1);
        carve(c1, r0, c1 + cw - 1, r1);
      } else {
        carve(c0, r0, c0 + cw - 1, r1);
        carve(c0, r1, c1, r1 + cw - 1);
      }
    }

    GridWorld candidate(params, seed, occ, {});
    const std::vector<int> main_cells = main_component_cells(candidate);
    std::size_t free_count = 0;
    for (bool b : occ)
      if (!b) ++free_count;
    if (free_count == 0 ||
        main_cells.size() < static_cast<std::size_t>(0.8 * free_count))
      continue;
    if (main_cells.size() < static_cast<std::size_t>(params.landmark_count))
      continue;

    // Landmarks: distinct free cells of the main component, random categories.
    std::vector<int> cells = main_cells;
    std::vector<Landmark> landmarks;
    for (int i = 0; i < params.landmark_count; ++i) {
      const std::size_t pick = i + rng.next_below(cells.size() - i);
      std::swap(cells[i], cells[pick]);
      Landmark lm;
      lm.id = i;
      lm.category = static_cast<int>(rng.next_below(params.category_count));
      lm.col = cells[i] % w;
      lm.row = cells[i] / w;
      landmarks.push_back(lm);
    }
    return GridWorld(params, seed, std::move(occ), std::move(landmarks));
  }
  throw std::runtime_error("generate_world: connectivity target unreachable");
}

AgentState step(const GridWorld& world, const AgentState& state, Action action,
                const ActuationNoise& noise, Rng* rng) {
  const bool jitter = noise.enabled && rng != nullptr;
  switch (action) {
    case Action::Stop:
      return state;
    case Action::TurnLeft:
    case Action::TurnRight: {
      double delta = (action == Action::TurnLeft) ? kTurnDegrees : -kTurnDegrees;
      if (jitter) delta += rng->uniform(-noise.rotation_jitter, noise.rotation_jitter);
      AgentState next = state;
      next.heading = wrap_degrees(state.heading + delta);
      return next;
    }
    case Action::MoveForward: {
      double dist = kStepMeters;
      if (jitter) dist *= 1.0 + rng->uniform(-noise.distance_jitter, noise.distance_jitter);
      const double rad = deg_to_rad(state.heading);
      const Vec2 target{state.x + dist * std::cos(rad), state.y + dist * std::sin(rad)};
      if (world.blocked_at(target)) return state;  // no slide
      AgentState next = state;
      next.x = target.x;
      next.y = target.y;
      return next;
    }
  }
  throw std::logic_error("step: bad action");
}

DistanceField DistanceField::from_point(const GridWorld& world, Vec2 source) {
  return from_points(world, std::span<const Vec2>(&source, 1));
}

DistanceField DistanceField::from_points(const GridWorld& world,
                                         std::span<const Vec2> sources) {
  const int w = world.width();
  const int n = w * world.height();
  DistanceField field;
  field.dist_.assign(n, std::numeric_limits<double>::infinity());
  field.owner_.assign(n, -1);
  std::vector<CellCost> cost(n);

  using HeapItem = std::pair<double, int>;  // (distance, cell)
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;

  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto [col, row] = world.cell_of(sources[i]);
    if (world.blocked(col, row))
      throw std::invalid_argument("DistanceField: source point is blocked");
    const int idx = world.cell_index(col, row);
    if (field.owner_[idx] >= 0) continue;  // earlier source keeps the cell
    field.dist_[idx] = 0.0;
    field.owner_[idx] = static_cast<int>(i);
    cost[idx] = CellCost{};
    heap.emplace(0.0, idx);
  }

  while (!heap.empty()) {
    const auto [d, cur] = heap.top();
    heap.pop();
    if (d > field.dist_[cur]) continue;
    const int ccol = cur % w;
    const int crow = cur / w;
    for (int k = 0; k < 8; ++k) {
      const int nc = ccol + kNeighborCol[k];
      const int nr = crow + kNeighborRow[k];
      if (world.blocked(nc, nr)) continue;
      const int idx = world.cell_index(nc, nr);
      CellCost next_cost = cost[cur];
      if (k < 4)
        ++next_cost.straight;
      else
        ++next_cost.diagonal;
      const double nd = canonical_distance(next_cost, world.cell_size());
      // Ties keep the lowest owner index so labels are deterministic.
      if (nd < field.dist_[idx] ||
          (nd == field.dist_[idx] && field.owner_[cur] < field.owner_[idx])) {
        field.dist_[idx] = nd;
        field.owner_[idx] = field.owner_[cur];
        cost[idx] = next_cost;
        heap.emplace(nd, idx);
      }
    }
  }
  return field;
}

double DistanceField::at(const GridWorld& world, Vec2 p) const {
  const auto [col, row] = world.cell_of(p);
  if (world.blocked(col, row))
    throw std::invalid_argument("DistanceField::at: point is blocked");
  return dist_[world.cell_index(col, row)];
}

int DistanceField::owner_at(const GridWorld& world, Vec2 p) const {
  const auto [col, row] = world.cell_of(p);
  if (world.blocked(col, row))
    throw std::invalid_argument("DistanceField::owner_at: point is blocked");
  return owner_[world.cell_index(col, row)];
}

double geodesic_distance(const GridWorld& world, Vec2 a, Vec2 b) {
  const auto [ac, ar] = world.cell_of(a);
  const auto [bc, br] = world.cell_of(b);
  if (world.blocked(ac, ar) || world.blocked(bc, br))
    throw std::invalid_argument("geodesic_distance: point is blocked");
  if (ac == bc && ar == br) return 0.0;
  const DistanceField field = DistanceField::from_point(world, a);
  return field.at_cell(world.cell_index(bc, br));
}

std::vector<AgentState> shortest_path(const GridWorld& world,
                                      const AgentState& start, Vec2 goal) {
  const Vec2 start_pos{start.x, start.y};
  const double total = geodesic_distance(world, start_pos, goal);
  if (std::isinf(total)) throw std::runtime_error("shortest_path: unreachable goal");
  if (total <= world.params().success_radius) return {start};

  // Dijkstra from the start cell with parent tracking.
  const int w = world.width();
  const int n = w * world.height();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<CellCost> cost(n);
  std::vector<int> parent(n, -1);
  using HeapItem = std::pair<double, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;

  const auto [sc, sr] = world.cell_of(start_pos);
  const auto [gc, gr] = world.cell_of(goal);
  const int start_idx = world.cell_index(sc, sr);
  const int goal_idx = world.cell_index(gc, gr);
  dist[start_idx] = 0.0;
  heap.emplace(0.0, start_idx);
  while (!heap.empty()) {
    const auto [d, cur] = heap.top();
    heap.pop();
    if (d > dist[cur]) continue;
    if (cur == goal_idx) break;
    const int ccol = cur % w;
    const int crow = cur / w;
    for (int k = 0; k < 8; ++k) {
      const int nc = ccol + kNeighborCol[k];
      const int nr = crow + kNeighborRow[k];
      if (world.blocked(nc, nr)) continue;
      const int idx = world.cell_index(nc, nr);
      CellCost next_cost = cost[cur];
      if (k < 4)
        ++next_cost.straight;
      else
        ++next_cost.diagonal;
      const double nd = canonical_distance(next_cost, world.cell_size());
      if (nd < dist[idx]) {
        dist[idx] = nd;
        cost[idx] = next_cost;
        parent[idx] = cur;
        heap.emplace(nd, idx);
      }
    }
  }

  std::vector<int> cells;
  for (int cur = goal_idx; cur >= 0; cur = parent[cur]) {
    cells.push_back(cur);
    if (cur == start_idx) break;
  }
  std::reverse(cells.begin(), cells.end());

  std::vector<AgentState> path;
  path.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Vec2 pos = i == 0 ? start_pos
                            : world.cell_center(cells[i] % w, cells[i] / w);
    AgentState s;
    s.x = pos.x;
    s.y = pos.y;
    path.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    path[i].heading = wrap_degrees(rad_to_deg(
        std::atan2(path[i + 1].y - path[i].y, path[i + 1].x - path[i].x)));
  }
  if (path.size() >= 2) path.back().heading = path[path.size() - 2].heading;
  else path.back().heading = start.heading;
  return path;
}

Frame observe(const GridWorld& world, const AgentState& state, int t) {
  const WorldGenParams& p = world.params();
  const int cats = p.category_count;
  std::vector<double> v(static_cast<std::size_t>(cats) + 2, 0.0);
  const Vec2 pos{state.x, state.y};

  for (const Landmark& lm : world.landmarks()) {
    const Vec2 center = world.cell_center(lm.col, lm.row);
    const double d = distance(pos, center);
    if (d > p.view_range || d < 1e-9) continue;
    const double bearing = wrap_degrees(
        rad_to_deg(std::atan2(center.y - pos.y, center.x - pos.x)));
    if (std::abs(signed_angle_delta(bearing, state.heading)) > p.fov_degrees / 2.0)
      continue;
    if (!world.line_of_sight(pos, center)) continue;
    v[lm.category] += 1.0 / (1.0 + d);
  }

  // Blocked fraction over cells whose center falls inside the view cone.
  const int radius_cells =
      static_cast<int>(std::ceil(p.view_range / world.cell_size())) + 1;
  const auto [pcol, prow] = world.cell_of(pos);
  int total = 0;
  int blocked_count = 0;
  for (int row = prow - radius_cells; row <= prow + radius_cells; ++row) {
    for (int col = pcol - radius_cells; col <= pcol + radius_cells; ++col) {
      if (!world.in_bounds(col, row)) continue;
      const Vec2 center = world.cell_center(col, row);
      const double d = distance(pos, center);
      if (d > p.view_range || d < 1e-9) continue;
      const double bearing = wrap_degrees(
          rad_to_deg(std::atan2(center.y - pos.y, center.x - pos.x)));
      if (std::abs(signed_angle_delta(bearing, state.heading)) > p.fov_degrees / 2.0)
        continue;
      ++total;
      if (world.blocked(col, row)) ++blocked_count;
    }
  }
  v[cats] = total > 0 ? static_cast<double>(blocked_count) / total : 0.0;
  // Kept strictly positive so the stacked vector can never be all-zero.
  v[cats + 1] = 0.5 + state.heading / 720.0;

  Frame frame;
  frame.timestamp = t;
  frame.pose_snapshot = state;
  frame.embedding.assign(p.embedding_dim, 0.0);
  const std::vector<double>& proj = world.projection();
  const int feat = cats + 2;
  for (int i = 0; i < p.embedding_dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < feat; ++j) s += proj[static_cast<std::size_t>(i) * feat + j] * v[j];
    frame.embedding[i] = s;
  }
  normalize(frame.embedding);
  return frame;
}

std::vector<double> instruction_embedding(const GridWorld& world,
                                          std::span<const int> waypoint_ids) {
  if (waypoint_ids.empty())
    throw std::invalid_argument("instruction_embedding: empty waypoint list");
  const WorldGenParams& p = world.params();
  const int cats = p.category_count;
  std::vector<double> u(static_cast<std::size_t>(cats) + 2, 0.0);
  double decay = 1.0;
  for (int id : waypoint_ids) {
    const Landmark& lm = world.landmark_by_id(id);  // throws on unknown id
    u[lm.category] += decay;
    decay *= 0.9;
  }
  std::vector<double> e(static_cast<std::size_t>(p.embedding_dim), 0.0);
  const std::vector<double>& proj = world.projection();
  const int feat = cats + 2;
  for (int i = 0; i < p.embedding_dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < feat; ++j) s += proj[static_cast<std::size_t>(i) * feat + j] * u[j];
    e[i] = s;
  }
  normalize(e);
  return e;
}

}  // namespace deconav
