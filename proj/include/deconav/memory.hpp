#pragma once

#include <span>
#include <vector>

#include "deconav/frame.hpp"

namespace deconav {

/// Weights of the frame-selection objective. The relevance weight lambda_r
/// trades instruction relevance against the redundancy penalties, whose
/// visual and temporal components are balanced by w_v + w_t = 1.
struct RefineParams {
  double lambda_r = 0.5;
  double w_v = 0.5;
  double w_t = 0.5;
  double epsilon = 1.0;  // temporal smoothing constant, in steps
  int k = 8;             // bank capacity

  void validate() const;
};

/// Bounded set of selected frames, ordered by ascending timestamp.
struct MemoryBank {
  std::vector<Frame> frames;
  int capacity = 8;
};

/// All stored historical frames eligible for selection, ordered by ascending
/// timestamp with unique timestamps.
struct CandidatePool {
  std::vector<Frame> frames;
};

/// Cosine similarity between a frame embedding and the instruction embedding.
double sim_sem(const Frame& f, std::span<const double> instruction);

/// Maximum cosine similarity between a candidate and any bank frame.
/// Defined as 0 for an empty bank.
double sim_vis(const Frame& f, const MemoryBank& bank);

/// Temporal proximity penalty 1 / (min timestamp gap + epsilon).
/// Defined as 0 for an empty bank.
double sim_temp(const Frame& f, const MemoryBank& bank, double epsilon);

/// Selection score: lambda_r * relevance - (1 - lambda_r) * (w_v * visual +
/// w_t * temporal). With an empty bank both penalties vanish and the score
/// reduces to pure relevance.
double frame_score(const Frame& f, const MemoryBank& bank,
                   std::span<const double> instruction, const RefineParams& p);

/// Greedy selection of up to k frames from the pool: repeatedly picks the
/// highest-scoring candidate against the bank built so far, ties broken by
/// lowest timestamp. The result is ordered by timestamp. Pools smaller than
/// k are returned whole.
MemoryBank refine(const CandidatePool& pool, std::span<const double> instruction,
                  const RefineParams& p);

/// Baseline: k frames at evenly spaced indices over the pool's timestamp
/// order; first and last are always included when k >= 2.
MemoryBank uniform_sample(const CandidatePool& pool, int k);

/// Streaming state: the most recent frames are kept in a short window that is
/// fed to the policy directly; older frames spill into the candidate pool.
struct StreamState {
  CandidatePool pool;
  std::vector<Frame> recent;  // oldest first, at most recent_capacity frames
  MemoryBank bank;
  int recent_capacity = 4;
};

/// Window/pool bookkeeping shared by every memory mode: appends the frame to
/// the recent window and spills the oldest window frame into the pool once
/// the window is full. Throws on non-monotonic timestamps.
void stream_push(StreamState& st, Frame frame);

/// Online update: stream_push followed by rebuilding the bank from scratch
/// over the pool. Recompute-per-step is the reference semantics; any
/// incremental scheme must be output-equivalent.
void update_online(StreamState& st, Frame frame,
                   std::span<const double> instruction, const RefineParams& p);

}  // namespace deconav
