#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deconav/world.hpp"

namespace deconav {

struct Instruction {
  std::vector<int> waypoint_landmark_ids;  // visit order
  std::string text_form;
  std::vector<double> embedding;  // unit norm, shares the world projection
};

struct Episode {
  int id = 0;
  std::uint64_t world_seed = 0;
  AgentState start;
  Vec2 goal;
  std::vector<AgentState> expert_path;
  Instruction instruction;
  double shortest_geodesic_length = 0.0;
};

struct EpisodeGenParams {
  double min_separation = 5.0;   // meters, geodesic
  double max_separation = 15.0;  // meters, geodesic
  int max_retries = 400;
};

/// Samples an episode: start pose and goal with geodesic separation inside
/// the configured band, expert path along the shortest route, and an
/// instruction built from the landmarks nearest to evenly spaced path points
/// (2-5 waypoints). Deterministic per (world, seed). Throws std::runtime_error
/// after bounded retries.
Episode generate_episode(const GridWorld& world, std::uint64_t seed, int id,
                         const EpisodeGenParams& params = {});

/// Swaps start and goal, reverses the expert path with headings flipped 180
/// degrees, reverses the waypoints and recomputes the instruction embedding.
Episode reverse_episode(const GridWorld& world, const Episode& e);

/// Concatenates two episodes from the same world with a shortest-path
/// connector between e1's goal and e2's start. The stitched reference length
/// is the sum of both legs plus the connector geodesic. Throws
/// std::invalid_argument on different worlds or when the gap exceeds max_gap.
Episode stitch_episodes(const GridWorld& world, const Episode& e1,
                        const Episode& e2, double max_gap = 2.0);

/// Length of the polyline through consecutive path positions, in meters.
double path_length(std::span<const AgentState> path);

}  // namespace deconav
