#include "deconav/correction.hpp"

#include <stdexcept>

namespace deconav {
namespace {

enum class CollectMode { TrustRegion, Dagger };

CorrectionDataset collect_impl(const GridWorld& world,
                               std::span<const Episode> episodes,
                               const PolicyFn& policy,
                               const CollectionConfig& cfg,
                               const RefineParams& refine_params,
                               const std::string& policy_id, CollectMode mode) {
  cfg.validate();
  refine_params.validate();

  CorrectionDataset out;
  out.provenance.policy_id = policy_id;
  out.provenance.tau = cfg.tau;
  out.provenance.seeds = cfg.seeds;

  const double success_radius = world.params().success_radius;
  const ActuationNoise no_noise;  // corrective labels need clean actuation

  for (const Episode& episode : episodes) {
    ExpertFollower follower(world, episode.expert_path, success_radius);
    const DistanceField goal_field = DistanceField::from_point(world, episode.goal);

    EpisodeCollectionLog log;
    log.episode_id = episode.id;

    StreamState stream;
    AgentState state = episode.start;
    Frame frame = observe(world, state, 0);
    update_online(stream, frame, episode.instruction.embedding, refine_params);

    ActionChunk chunk;
    int chunk_pos = kChunkLength;  // force a prediction at t = 0
    for (int t = 0; t <= cfg.t_max; ++t) {
      log.steps = t;
      const double dm = follower.deviation(state);
      if (mode == CollectMode::TrustRegion) {
        if (dm > cfg.tau) {
          log.aborted_at = t;
          break;
        }
        if (dm > cfg.on_path_tolerance) {
          StateActionPair pair;
          pair.state = state;
          pair.expert_action = follower.action(state);
          pair.frame = frame;
          pair.episode_id = episode.id;
          pair.step_index = t;
          pair.deviation = dm;
          out.pairs.push_back(std::move(pair));
          ++log.pairs;
        }
      } else {
        StateActionPair pair;
        pair.state = state;
        pair.expert_action = follower.action(state);
        pair.frame = frame;
        pair.episode_id = episode.id;
        pair.step_index = t;
        pair.deviation = dm;
        out.pairs.push_back(std::move(pair));
        ++log.pairs;
      }
      if (t == cfg.t_max) break;

      if (chunk_pos == kChunkLength) {
        const FeatureVector features = featurize(
            episode.instruction.embedding, stream.bank,
            stream.recent, frame, t, cfg.t_max);
        chunk = policy(PolicyContext{world, episode, state, t, features});
        chunk_pos = 0;
      }
      const Action action = chunk.actions[chunk_pos++];
      if (action == Action::Stop) {
        log.success = goal_field.at(world, {state.x, state.y}) <= success_radius;
        break;
      }
      state = step(world, state, action, no_noise);
      frame = observe(world, state, t + 1);
      update_online(stream, frame, episode.instruction.embedding, refine_params);
    }
    out.logs.push_back(log);
  }
  return out;
}

}  // namespace

void CollectionConfig::validate() const {
  if (tau <= 0.0) throw std::invalid_argument("CollectionConfig: tau must be > 0");
  if (on_path_tolerance <= 0.0 || on_path_tolerance >= tau)
    throw std::invalid_argument("CollectionConfig: need 0 < delta < tau");
  if (t_max < 1) throw std::invalid_argument("CollectionConfig: t_max must be >= 1");
}

double deviation_metric(const GridWorld& world, const AgentState& state,
                        std::span<const AgentState> expert_path) {
  if (expert_path.empty())
    throw std::invalid_argument("deviation_metric: empty expert path");
  std::vector<Vec2> pts;
  pts.reserve(expert_path.size());
  for (const AgentState& s : expert_path) pts.push_back({s.x, s.y});
  const DistanceField field = DistanceField::from_points(world, pts);
  return field.at(world, {state.x, state.y});
}

CorrectionDataset collect_corrections(const GridWorld& world,
                                      std::span<const Episode> episodes,
                                      const PolicyFn& policy,
                                      const CollectionConfig& cfg,
                                      const RefineParams& refine_params,
                                      const std::string& policy_id) {
  return collect_impl(world, episodes, policy, cfg, refine_params, policy_id,
                      CollectMode::TrustRegion);
}

CorrectionDataset dagger_collect(const GridWorld& world,
                                 std::span<const Episode> episodes,
                                 const PolicyFn& policy,
                                 const CollectionConfig& cfg,
                                 const RefineParams& refine_params,
                                 const std::string& policy_id) {
  return collect_impl(world, episodes, policy, cfg, refine_params, policy_id,
                      CollectMode::Dagger);
}

CorrectionDataset merge(std::span<const CorrectionDataset> datasets) {
  CorrectionDataset out;
  bool first = true;
  for (const CorrectionDataset& d : datasets) {
    if (first) {
      out.provenance = d.provenance;
      first = false;
    } else if (d.provenance.schema != out.provenance.schema) {
      throw std::invalid_argument("merge: schema version mismatch");
    }
    out.pairs.insert(out.pairs.end(), d.pairs.begin(), d.pairs.end());
    out.logs.insert(out.logs.end(), d.logs.begin(), d.logs.end());
    for (std::uint64_t s : d.provenance.seeds) {
      bool present = false;
      for (std::uint64_t t : out.provenance.seeds) present |= (t == s);
      if (!present) out.provenance.seeds.push_back(s);
    }
  }
  return out;
}

CorrectionDataset truncate(const CorrectionDataset& dataset, std::size_t n) {
  CorrectionDataset out;
  out.provenance = dataset.provenance;
  out.logs = dataset.logs;
  const std::size_t count = std::min(n, dataset.pairs.size());
  out.pairs.assign(dataset.pairs.begin(), dataset.pairs.begin() + count);
  return out;
}

}  // namespace deconav
