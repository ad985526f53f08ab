#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "deconav/episode.hpp"
#include "deconav/memory.hpp"
#include "deconav/world.hpp"

namespace deconav {

constexpr int kChunkLength = 4;

using FeatureVector = std::vector<double>;

/// Numeric policy input: [instruction | bank mean | recent mean | current
/// frame | bank-fill fraction | elapsed fraction], total 4*d + 2 entries.
/// Empty bank or window slots are zero vectors.
FeatureVector featurize(std::span<const double> instruction,
                        const MemoryBank& bank, std::span<const Frame> recent,
                        const Frame& current, int t, int t_max);

inline int feature_dim(int embedding_dim) { return 4 * embedding_dim + 2; }

struct ActionChunk {
  std::array<Action, kChunkLength> actions{Action::Stop, Action::Stop,
                                           Action::Stop, Action::Stop};
};

/// Four position-conditioned linear heads. Head j maps the feature vector
/// concatenated with onehot(j) to four action logits.
struct PolicyParams {
  int feature_dim = 0;
  std::uint64_t init_seed = 0;
  // weights[j] is row-major kActionCount x (feature_dim + kChunkLength).
  std::array<std::vector<double>, kChunkLength> weights;
  std::array<std::array<double, kActionCount>, kChunkLength> biases{};

  int head_input_dim() const { return feature_dim + kChunkLength; }
  void validate() const;
};

/// Small random initialization, deterministic for a fixed seed.
PolicyParams init_policy(int feature_dim, std::uint64_t seed);

/// Logits of head position j for a feature vector.
std::array<double, kActionCount> head_logits(const PolicyParams& params,
                                             std::span<const double> features,
                                             int position);

/// Greedy decoding: per position, argmax of the head logits with ties broken
/// by enum order (FORWARD < LEFT < RIGHT < STOP).
ActionChunk predict_chunk(const PolicyParams& params,
                          std::span<const double> features);

/// Path follower used as the expert. Precomputes, per episode, the geodesic
/// field of the reference path (with nearest-state labels) and of the goal,
/// so per-step queries are O(1).
class ExpertFollower {
 public:
  ExpertFollower(const GridWorld& world, std::span<const AgentState> expert_path,
                 double success_radius);

  /// STOP within the success radius of the path end; otherwise turn until the
  /// bearing to the lookahead waypoint is within half a turn increment, then
  /// move forward. Headings whose forward landing is blocked are skipped when
  /// choosing the alignment, so the follower cannot wedge against a corner.
  Action action(const AgentState& state) const;

  /// Minimum geodesic distance from the state to any reference-path state.
  double deviation(const AgentState& state) const;

  double goal_distance(const AgentState& state) const;
  int nearest_index(const AgentState& state) const;

 private:
  const GridWorld& world_;
  std::vector<AgentState> path_;
  double success_radius_;
  DistanceField path_field_;
  DistanceField goal_field_;
};

/// One-shot convenience wrapper over ExpertFollower.
Action expert_action(const GridWorld& world, const AgentState& state,
                     std::span<const AgentState> expert_path,
                     double success_radius);

/// A chunked training example. Positions with valid=false are excluded from
/// the loss (used for isolated correction pairs where only the first action
/// is known).
struct TrainExample {
  FeatureVector features;
  std::array<Action, kChunkLength> target;
  std::array<bool, kChunkLength> valid{true, true, true, true};
};

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_size = 64;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  std::array<std::vector<double>, kChunkLength> weight_grads;
  std::array<std::array<double, kActionCount>, kChunkLength> bias_grads{};
};

/// Mean cross-entropy over valid chunk positions plus an l2 penalty on the
/// weights, with analytic gradients. Throws on an empty batch.
LossGrad loss_and_grad(const PolicyParams& params,
                       std::span<const TrainExample> batch, double l2 = 0.0);

struct TrainResult {
  PolicyParams params;
  std::vector<double> epoch_losses;
};

/// Mini-batch gradient descent on loss_and_grad. Deterministic for a fixed
/// config seed. Throws on an empty dataset.
TrainResult bc_train(std::span<const TrainExample> dataset, int feature_dim,
                     const TrainConfig& cfg);

/// Rollout-facing policy abstraction. Production policies read only the
/// features; scripted test policies may inspect the full context.
struct PolicyContext {
  const GridWorld& world;
  const Episode& episode;
  AgentState state;
  int t = 0;
  const FeatureVector& features;
};

using PolicyFn = std::function<ActionChunk(const PolicyContext&)>;

PolicyFn make_policy_fn(const PolicyParams& params);

}  // namespace deconav
