#include "deconav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace deconav {
namespace {

void add_mean_block(FeatureVector& out, std::size_t offset,
                    std::span<const Frame> frames, int dim) {
  if (frames.empty()) return;
  for (const Frame& f : frames) {
    if (static_cast<int>(f.embedding.size()) != dim)
      throw std::invalid_argument("featurize: embedding dimension mismatch");
    for (int i = 0; i < dim; ++i) out[offset + i] += f.embedding[i];
  }
  for (int i = 0; i < dim; ++i) out[offset + i] /= static_cast<double>(frames.size());
}

}  // namespace

FeatureVector featurize(std::span<const double> instruction,
                        const MemoryBank& bank, std::span<const Frame> recent,
                        const Frame& current, int t, int t_max) {
  const int d = static_cast<int>(instruction.size());
  if (static_cast<int>(current.embedding.size()) != d)
    throw std::invalid_argument("featurize: embedding dimension mismatch");
  if (t_max <= 0) throw std::invalid_argument("featurize: t_max must be > 0");

  FeatureVector out(static_cast<std::size_t>(feature_dim(d)), 0.0);
  std::copy(instruction.begin(), instruction.end(), out.begin());
  add_mean_block(out, static_cast<std::size_t>(d), bank.frames, d);
  add_mean_block(out, static_cast<std::size_t>(2) * d, recent, d);
  std::copy(current.embedding.begin(), current.embedding.end(),
            out.begin() + static_cast<std::size_t>(3) * d);
  const int cap = bank.capacity > 0 ? bank.capacity : 1;
  out[static_cast<std::size_t>(4) * d] =
      static_cast<double>(bank.frames.size()) / cap;
  out[static_cast<std::size_t>(4) * d + 1] =
      static_cast<double>(t) / static_cast<double>(t_max);
  return out;
}

void PolicyParams::validate() const {
  if (feature_dim <= 0) throw std::invalid_argument("PolicyParams: bad feature_dim");
  for (int j = 0; j < kChunkLength; ++j) {
    if (weights[j].size() !=
        static_cast<std::size_t>(kActionCount) * head_input_dim())
      throw std::invalid_argument("PolicyParams: weight shape mismatch");
    for (double w : weights[j])
      if (!std::isfinite(w)) throw std::invalid_argument("PolicyParams: non-finite weight");
    for (double b : biases[j])
      if (!std::isfinite(b)) throw std::invalid_argument("PolicyParams: non-finite bias");
  }
}

PolicyParams init_policy(int feature_dim, std::uint64_t seed) {
  if (feature_dim <= 0) throw std::invalid_argument("init_policy: bad feature_dim");
  PolicyParams p;
  p.feature_dim = feature_dim;
  p.init_seed = seed;
  Rng rng(derive_seed(seed, "policy-init"));
  for (int j = 0; j < kChunkLength; ++j) {
    p.weights[j].resize(static_cast<std::size_t>(kActionCount) * p.head_input_dim());
    for (double& w : p.weights[j]) w = 0.01 * rng.normal();
    p.biases[j].fill(0.0);
  }
  return p;
}

std::array<double, kActionCount> head_logits(const PolicyParams& params,
                                             std::span<const double> features,
                                             int position) {
  if (static_cast<int>(features.size()) != params.feature_dim)
    throw std::invalid_argument("head_logits: feature dimension mismatch");
  if (position < 0 || position >= kChunkLength)
    throw std::invalid_argument("head_logits: bad position");
  const int in_dim = params.head_input_dim();
  std::array<double, kActionCount> logits{};
  const std::vector<double>& w = params.weights[position];
  for (int a = 0; a < kActionCount; ++a) {
    double s = params.biases[position][a];
    const double* row = w.data() + static_cast<std::size_t>(a) * in_dim;
    for (int i = 0; i < params.feature_dim; ++i) s += row[i] * features[i];
    s += row[params.feature_dim + position];  // onehot(position) input
    logits[a] = s;
  }
  return logits;
}

ActionChunk predict_chunk(const PolicyParams& params,
                          std::span<const double> features) {
  ActionChunk chunk;
  for (int j = 0; j < kChunkLength; ++j) {
    const auto logits = head_logits(params, features, j);
    int best = 0;
    for (int a = 1; a < kActionCount; ++a)
      if (logits[a] > logits[best]) best = a;
    chunk.actions[j] = static_cast<Action>(best);
  }
  return chunk;
}

ExpertFollower::ExpertFollower(const GridWorld& world,
                               std::span<const AgentState> expert_path,
                               double success_radius)
    : world_(world),
      path_(expert_path.begin(), expert_path.end()),
      success_radius_(success_radius),
      path_field_(DistanceField::from_points(world, [&] {
        std::vector<Vec2> pts;
        pts.reserve(expert_path.size());
        for (const AgentState& s : expert_path) pts.push_back({s.x, s.y});
        return pts;
      }())),
      goal_field_(DistanceField::from_point(
          world, {expert_path.back().x, expert_path.back().y})) {
  if (path_.empty()) throw std::invalid_argument("ExpertFollower: empty path");
}

double ExpertFollower::deviation(const AgentState& state) const {
  return path_field_.at(world_, {state.x, state.y});
}

double ExpertFollower::goal_distance(const AgentState& state) const {
  return goal_field_.at(world_, {state.x, state.y});
}

int ExpertFollower::nearest_index(const AgentState& state) const {
  return path_field_.owner_at(world_, {state.x, state.y});
}

Action ExpertFollower::action(const AgentState& state) const {
  if (goal_distance(state) <= success_radius_) return Action::Stop;

  const int nearest = nearest_index(state);
  if (nearest < 0)
    throw std::runtime_error("ExpertFollower: state disconnected from path");
  const Vec2 anchor{path_[nearest].x, path_[nearest].y};

  // Lookahead: first waypoint more than one step beyond the nearest state.
  std::size_t target_idx = path_.size() - 1;
  for (std::size_t j = nearest + 1; j < path_.size(); ++j) {
    if (distance({path_[j].x, path_[j].y}, anchor) > kStepMeters + 1e-9) {
      target_idx = j;
      break;
    }
  }
  const Vec2 target{path_[target_idx].x, path_[target_idx].y};
  const double bearing = wrap_degrees(
      rad_to_deg(std::atan2(target.y - state.y, target.x - state.x)));

  // Commit to the reachable heading closest to the bearing whose forward
  // landing is free. The choice depends only on the position, so turning
  // toward it converges without left/right flip cycles at clipped corners.
  auto landing_free = [&](double heading) {
    const double rad = deg_to_rad(heading);
    return !world_.blocked_at({state.x + kStepMeters * std::cos(rad),
                               state.y + kStepMeters * std::sin(rad)});
  };
  int best_k = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int k = -11; k <= 12; ++k) {
    const double h = wrap_degrees(state.heading + kTurnDegrees * k);
    if (!landing_free(h)) continue;
    const double score = std::abs(signed_angle_delta(bearing, h));
    const bool better =
        score < best_score - 1e-12 ||
        (std::abs(score - best_score) <= 1e-12 &&
         (std::abs(k) < std::abs(best_k) ||
          (std::abs(k) == std::abs(best_k) && k > best_k)));
    if (best_score == std::numeric_limits<double>::infinity() || better) {
      best_score = score;
      best_k = k;
    }
  }
  if (std::isinf(best_score)) {
    // Fully walled in at step range; spin in place until the caller times out.
    return Action::TurnLeft;
  }
  if (best_k == 0) return Action::MoveForward;
  return best_k > 0 ? Action::TurnLeft : Action::TurnRight;
}

Action expert_action(const GridWorld& world, const AgentState& state,
                     std::span<const AgentState> expert_path,
                     double success_radius) {
  return ExpertFollower(world, expert_path, success_radius).action(state);
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (l2 < 0.0) throw std::invalid_argument("TrainConfig: l2 must be >= 0");
}

LossGrad loss_and_grad(const PolicyParams& params,
                       std::span<const TrainExample> batch, double l2) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  if (l2 < 0.0) throw std::invalid_argument("loss_and_grad: l2 must be >= 0");
  params.validate();

  LossGrad out;
  for (int j = 0; j < kChunkLength; ++j) {
    out.weight_grads[j].assign(params.weights[j].size(), 0.0);
    for (auto& b : out.bias_grads[j]) b = 0.0;
  }

  const int in_dim = params.head_input_dim();
  double ce_sum = 0.0;
  long long valid_count = 0;
  for (const TrainExample& ex : batch)
    for (int j = 0; j < kChunkLength; ++j)
      if (ex.valid[j]) ++valid_count;
  if (valid_count == 0)
    throw std::invalid_argument("loss_and_grad: no valid positions in batch");

  for (const TrainExample& ex : batch) {
    for (int j = 0; j < kChunkLength; ++j) {
      if (!ex.valid[j]) continue;
      const auto logits = head_logits(params, ex.features, j);
      double max_logit = logits[0];
      for (int a = 1; a < kActionCount; ++a) max_logit = std::max(max_logit, logits[a]);
      std::array<double, kActionCount> expd{};
      double z = 0.0;
      for (int a = 0; a < kActionCount; ++a) {
        expd[a] = std::exp(logits[a] - max_logit);
        z += expd[a];
      }
      const int target = static_cast<int>(ex.target[j]);
      ce_sum += -(logits[target] - max_logit - std::log(z));

      for (int a = 0; a < kActionCount; ++a) {
        const double g = (expd[a] / z - (a == target ? 1.0 : 0.0)) / valid_count;
        double* row = out.weight_grads[j].data() + static_cast<std::size_t>(a) * in_dim;
        for (int i = 0; i < params.feature_dim; ++i) row[i] += g * ex.features[i];
        row[params.feature_dim + j] += g;
        out.bias_grads[j][a] += g;
      }
    }
  }

  double l2_sum = 0.0;
  if (l2 > 0.0) {
    for (int j = 0; j < kChunkLength; ++j) {
      const std::vector<double>& w = params.weights[j];
      std::vector<double>& gw = out.weight_grads[j];
      for (std::size_t i = 0; i < w.size(); ++i) {
        l2_sum += w[i] * w[i];
        gw[i] += 2.0 * l2 * w[i];
      }
    }
  }
  out.loss = ce_sum / valid_count + l2 * l2_sum;
  return out;
}

TrainResult bc_train(std::span<const TrainExample> dataset, int feature_dim,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("bc_train: empty dataset");
  for (const TrainExample& ex : dataset)
    if (static_cast<int>(ex.features.size()) != feature_dim)
      throw std::invalid_argument("bc_train: feature dimension mismatch");

  TrainResult result;
  result.params = init_policy(feature_dim, cfg.seed);
  PolicyParams& p = result.params;

  Rng rng(derive_seed(cfg.seed, "bc-train"));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<TrainExample> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t pick = i + rng.next_below(order.size() - i);
      std::swap(order[i], order[pick]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);

      LossGrad lg = loss_and_grad(p, batch, cfg.l2);
      for (int j = 0; j < kChunkLength; ++j) {
        std::vector<double>& w = p.weights[j];
        const std::vector<double>& gw = lg.weight_grads[j];
        for (std::size_t i = 0; i < w.size(); ++i)
          w[i] -= cfg.learning_rate * gw[i];
        for (int a = 0; a < kActionCount; ++a)
          p.biases[j][a] -= cfg.learning_rate * lg.bias_grads[j][a];
      }
      epoch_loss += lg.loss;
      ++batches;
    }
    result.epoch_losses.push_back(epoch_loss / std::max(1, batches));
  }
  return result;
}

PolicyFn make_policy_fn(const PolicyParams& params) {
  return [params](const PolicyContext& ctx) {
    return predict_chunk(params, ctx.features);
  };
}

}  // namespace deconav
