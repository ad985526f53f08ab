#include "deconav/evalrun.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace deconav {

std::string memory_mode_name(MemoryMode mode) {
  switch (mode) {
    case MemoryMode::Amr: return "amr";
    case MemoryMode::Uniform: return "uniform";
    case MemoryMode::None: return "none";
  }
  throw std::logic_error("memory_mode_name: bad mode");
}

MemoryMode memory_mode_from_name(const std::string& name) {
  if (name == "amr") return MemoryMode::Amr;
  if (name == "uniform") return MemoryMode::Uniform;
  if (name == "none") return MemoryMode::None;
  throw std::invalid_argument("memory_mode_from_name: unknown mode " + name);
}

double dtw_geodesic(const GridWorld& world, std::span<const AgentState> path,
                    std::span<const AgentState> ref_path) {
  if (path.empty() || ref_path.empty())
    throw std::invalid_argument("dtw_geodesic: empty path");

  // One distance field per unique reference cell; costs are then lookups.
  std::map<int, DistanceField> fields;
  std::vector<const DistanceField*> ref_fields;
  ref_fields.reserve(ref_path.size());
  for (const AgentState& s : ref_path) {
    const auto [col, row] = world.cell_of({s.x, s.y});
    const int idx = world.cell_index(col, row);
    auto it = fields.find(idx);
    if (it == fields.end())
      it = fields.emplace(idx, DistanceField::from_point(world, {s.x, s.y})).first;
    ref_fields.push_back(&it->second);
  }

  const std::size_t n = path.size();
  const std::size_t m = ref_path.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, kInf);
  std::vector<double> cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double cost = ref_fields[j]->at(world, {path[i].x, path[i].y});
      double best;
      if (i == 0 && j == 0) best = 0.0;
      else if (i == 0) best = cur[j - 1];
      else if (j == 0) best = prev[j];
      else best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double ndtw(const GridWorld& world, std::span<const AgentState> path,
            std::span<const AgentState> ref_path, double d_th) {
  if (d_th <= 0.0) throw std::invalid_argument("ndtw: d_th must be > 0");
  const double cost = dtw_geodesic(world, path, ref_path);
  return std::exp(-cost / (static_cast<double>(ref_path.size()) * d_th));
}

EpisodeResult run_episode(const GridWorld& world, const Episode& episode,
                          const PolicyFn& policy, const RolloutConfig& cfg,
                          const TraceSink& trace) {
  cfg.refine.validate();
  const double success_radius = world.params().success_radius;
  const DistanceField goal_field = DistanceField::from_point(world, episode.goal);
  const ActuationNoise no_noise;

  EpisodeResult result;
  result.episode_id = episode.id;
  result.shortest_length = episode.shortest_geodesic_length;

  StreamState stream;
  AgentState state = episode.start;
  Frame frame = observe(world, state, 0);

  // AMR refines per frame; the other modes only keep the stream bookkeeping.
  auto push_frame = [&](Frame f) {
    if (cfg.memory_mode == MemoryMode::Amr)
      update_online(stream, std::move(f), episode.instruction.embedding, cfg.refine);
    else
      stream_push(stream, std::move(f));
  };
  push_frame(frame);

  result.agent_path.push_back(state);
  double min_goal = goal_field.at(world, {state.x, state.y});

  MemoryBank bank;  // bank handed to the policy under the configured mode
  auto current_bank = [&]() -> const MemoryBank& {
    switch (cfg.memory_mode) {
      case MemoryMode::Amr:
        return stream.bank;
      case MemoryMode::Uniform:
        bank = uniform_sample(stream.pool, cfg.refine.k);
        return bank;
      case MemoryMode::None:
        bank = MemoryBank{};
        bank.capacity = cfg.refine.k;
        return bank;
    }
    throw std::logic_error("run_episode: bad memory mode");
  };

  ActionChunk chunk;
  int chunk_pos = kChunkLength;
  std::vector<int> bank_ts;  // bank fed to the most recent prediction
  int stall = 0;
  bool stopped = false;
  int t = 0;
  for (; t < cfg.t_max; ++t) {
    if (chunk_pos == kChunkLength) {
      const MemoryBank& b = current_bank();
      const FeatureVector features =
          featurize(episode.instruction.embedding, b,
                    stream.recent, frame, t,
                    cfg.t_max);
      chunk = policy(PolicyContext{world, episode, state, t, features});
      chunk_pos = 0;
      bank_ts.clear();
      for (const Frame& f : b.frames) bank_ts.push_back(f.timestamp);
    }
    const Action action = chunk.actions[chunk_pos++];
    if (trace) {
      TraceStep ts;
      ts.t = t;
      ts.state = state;
      ts.action = action;
      ts.bank_timestamps = bank_ts;
      trace(ts);
    }
    result.cumulative_return += std::pow(cfg.gamma, t) * cfg.step_penalty;
    if (action == Action::Stop) {
      stopped = true;
      ++result.steps_taken;
      break;
    }
    const AgentState next = step(world, state, action, no_noise);
    if (action == Action::MoveForward) {
      const double moved = std::hypot(next.x - state.x, next.y - state.y);
      result.agent_path_length += moved;
      stall = moved < 1e-12 ? stall + 1 : 0;
    } else {
      stall = 0;
    }
    state = next;
    ++result.steps_taken;
    result.agent_path.push_back(state);
    min_goal = std::min(min_goal, goal_field.at(world, {state.x, state.y}));
    if (stall >= cfg.stall_limit) break;

    frame = observe(world, state, t + 1);
    push_frame(frame);
  }

  result.stop_geodesic_to_goal = goal_field.at(world, {state.x, state.y});
  result.min_goal_distance_along_path = min_goal;
  result.success = stopped && result.stop_geodesic_to_goal <= success_radius;
  if (result.success)
    result.cumulative_return +=
        std::pow(cfg.gamma, result.steps_taken) * cfg.success_bonus;
  result.ndtw = ndtw(world, result.agent_path, episode.expert_path, success_radius);
  return result;
}

EpisodeResult run_episode(const GridWorld& world, const Episode& episode,
                          const PolicyParams& params, const RolloutConfig& cfg,
                          const TraceSink& trace) {
  return run_episode(world, episode, make_policy_fn(params), cfg, trace);
}

MetricsReport compute_metrics(std::span<const EpisodeResult> results,
                              double success_radius,
                              const std::string& config_fingerprint) {
  if (results.empty()) throw std::invalid_argument("compute_metrics: empty results");
  MetricsReport report;
  report.n_episodes = static_cast<int>(results.size());
  report.config_fingerprint = config_fingerprint;
  for (const EpisodeResult& r : results) {
    report.sr += r.success ? 1.0 : 0.0;
    if (r.success)
      report.spl += r.shortest_length /
                    std::max(r.agent_path_length, r.shortest_length);
    report.ne += r.stop_geodesic_to_goal;
    report.os += r.min_goal_distance_along_path <= success_radius ? 1.0 : 0.0;
    report.ndtw += r.ndtw;
  }
  const double n = static_cast<double>(report.n_episodes);
  report.sr /= n;
  report.spl /= n;
  report.ne /= n;
  report.os /= n;
  report.ndtw /= n;
  return report;
}

}  // namespace deconav
