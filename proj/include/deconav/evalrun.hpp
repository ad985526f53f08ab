#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deconav/episode.hpp"
#include "deconav/memory.hpp"
#include "deconav/policy.hpp"
#include "deconav/world.hpp"

namespace deconav {

enum class MemoryMode { Amr, Uniform, None };

std::string memory_mode_name(MemoryMode mode);
MemoryMode memory_mode_from_name(const std::string& name);

struct RolloutConfig {
  MemoryMode memory_mode = MemoryMode::Amr;
  RefineParams refine;
  int t_max = 500;
  int stall_limit = 20;  // consecutive blocked forward attempts before failing
  double step_penalty = -0.01;
  double success_bonus = 10.0;
  double gamma = 0.99;  // return discounting, logging only
};

/// Per-step trace record; bank contents appear as timestamp lists.
struct TraceStep {
  int t = 0;
  AgentState state;
  Action action = Action::Stop;
  std::vector<int> bank_timestamps;
};

using TraceSink = std::function<void(const TraceStep&)>;

struct EpisodeResult {
  int episode_id = 0;
  bool success = false;
  double stop_geodesic_to_goal = 0.0;
  std::vector<AgentState> agent_path;
  double agent_path_length = 0.0;
  double shortest_length = 0.0;
  int steps_taken = 0;
  double min_goal_distance_along_path = 0.0;
  double cumulative_return = 0.0;  // logging only
  double ndtw = 0.0;
};

struct MetricsReport {
  double sr = 0.0;
  double spl = 0.0;
  double ne = 0.0;
  double os = 0.0;
  double ndtw = 0.0;
  int n_episodes = 0;
  std::string config_fingerprint;
};

/// Dynamic-time-warping alignment cost between two paths under geodesic
/// point-to-point costs. Throws on empty paths.
double dtw_geodesic(const GridWorld& world, std::span<const AgentState> path,
                    std::span<const AgentState> ref_path);

/// exp(-DTW / (|ref| * d_th)); 1.0 exactly when the alignment cost is zero.
double ndtw(const GridWorld& world, std::span<const AgentState> path,
            std::span<const AgentState> ref_path, double d_th);

/// Closed-loop rollout: observe, update memory per the configured mode,
/// featurize, predict a chunk, execute its actions until STOP, a collision
/// stall or the step limit. Success requires STOP within the success radius.
/// Noise is always disabled for evaluation.
EpisodeResult run_episode(const GridWorld& world, const Episode& episode,
                          const PolicyFn& policy, const RolloutConfig& cfg,
                          const TraceSink& trace = {});

EpisodeResult run_episode(const GridWorld& world, const Episode& episode,
                          const PolicyParams& params, const RolloutConfig& cfg,
                          const TraceSink& trace = {});

/// Aggregates per-episode results. Throws on an empty result set.
MetricsReport compute_metrics(std::span<const EpisodeResult> results,
                              double success_radius,
                              const std::string& config_fingerprint = "");

}  // namespace deconav
