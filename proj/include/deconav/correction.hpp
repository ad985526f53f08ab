#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deconav/episode.hpp"
#include "deconav/memory.hpp"
#include "deconav/policy.hpp"
#include "deconav/world.hpp"

namespace deconav {

/// One corrective supervision record: the visited state, the expert action
/// queried for it, and the observation at that state.
struct StateActionPair {
  AgentState state;
  Action expert_action = Action::Stop;
  Frame frame;
  int episode_id = 0;
  int step_index = 0;
  double deviation = 0.0;  // meters, geodesic to the reference path
};

struct CollectionConfig {
  double tau = 3.0;               // trust-region threshold, meters
  double on_path_tolerance = 0.05;  // delta, meters
  int t_max = 500;
  std::vector<std::uint64_t> seeds;

  void validate() const;
};

struct Provenance {
  std::string schema = "v1";
  std::string policy_id;  // checkpoint checksum or label
  double tau = 0.0;
  std::vector<std::uint64_t> seeds;
};

/// Per-episode collection summary, kept for audits.
struct EpisodeCollectionLog {
  int episode_id = 0;
  int steps = 0;
  std::optional<int> aborted_at;  // step of the first out-of-region state
  bool success = false;
  int pairs = 0;
};

struct CorrectionDataset {
  std::vector<StateActionPair> pairs;
  Provenance provenance;
  std::vector<EpisodeCollectionLog> logs;
};

/// Minimum geodesic distance from a state to any state of a reference path.
double deviation_metric(const GridWorld& world, const AgentState& state,
                        std::span<const AgentState> expert_path);

/// Rolls the policy through each episode with actuation noise disabled and
/// harvests expert corrections inside the trusted band: a pair is stored at
/// every step whose deviation lies in (delta, tau]; the episode aborts at the
/// first step whose deviation exceeds tau. Memory is updated online per
/// frame. Deterministic for fixed inputs.
CorrectionDataset collect_corrections(const GridWorld& world,
                                      std::span<const Episode> episodes,
                                      const PolicyFn& policy,
                                      const CollectionConfig& cfg,
                                      const RefineParams& refine_params,
                                      const std::string& policy_id = "");

/// Vanilla baseline: labels the expert action at every visited state, with no
/// trust region and no abort.
CorrectionDataset dagger_collect(const GridWorld& world,
                                 std::span<const Episode> episodes,
                                 const PolicyFn& policy,
                                 const CollectionConfig& cfg,
                                 const RefineParams& refine_params,
                                 const std::string& policy_id = "");

/// Concatenates datasets; schema versions must match.
CorrectionDataset merge(std::span<const CorrectionDataset> datasets);

/// Deterministic truncation to the first n pairs in (episode, step) order.
CorrectionDataset truncate(const CorrectionDataset& dataset, std::size_t n);

}  // namespace deconav
