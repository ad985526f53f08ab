#include "deconav/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "deconav/vecmath.hpp"

namespace deconav {

void RefineParams::validate() const {
  if (lambda_r < 0.0 || lambda_r > 1.0)
    throw std::invalid_argument("RefineParams: lambda_r must be in [0, 1]");
  if (w_v < 0.0 || w_t < 0.0)
    throw std::invalid_argument("RefineParams: weights must be >= 0");
  if (std::abs(w_v + w_t - 1.0) > 1e-9)
    throw std::invalid_argument("RefineParams: w_v + w_t must equal 1");
  if (epsilon <= 0.0) throw std::invalid_argument("RefineParams: epsilon must be > 0");
  if (k < 1) throw std::invalid_argument("RefineParams: k must be >= 1");
}

double sim_sem(const Frame& f, std::span<const double> instruction) {
  return cosine(f.embedding, instruction);
}

double sim_vis(const Frame& f, const MemoryBank& bank) {
  double best = 0.0;
  bool first = true;
  for (const Frame& m : bank.frames) {
    const double c = cosine(f.embedding, m.embedding);
    if (first || c > best) best = c;
    first = false;
  }
  return first ? 0.0 : best;
}

double sim_temp(const Frame& f, const MemoryBank& bank, double epsilon) {
  if (bank.frames.empty()) return 0.0;
  long long gap = std::numeric_limits<long long>::max();
  for (const Frame& m : bank.frames)
    gap = std::min(gap, std::llabs(static_cast<long long>(f.timestamp) - m.timestamp));
  return 1.0 / (static_cast<double>(gap) + epsilon);
}

double frame_score(const Frame& f, const MemoryBank& bank,
                   std::span<const double> instruction, const RefineParams& p) {
  const double sem = sim_sem(f, instruction);
  const double vis = sim_vis(f, bank);
  const double temp = sim_temp(f, bank, p.epsilon);
  return p.lambda_r * sem - (1.0 - p.lambda_r) * (p.w_v * vis + p.w_t * temp);
}

MemoryBank refine(const CandidatePool& pool, std::span<const double> instruction,
                  const RefineParams& p) {
  p.validate();
  MemoryBank bank;
  bank.capacity = p.k;
  const std::size_t n = pool.frames.size();
  if (n == 0) return bank;
  if (n <= static_cast<std::size_t>(p.k)) {
    bank.frames = pool.frames;
    std::sort(bank.frames.begin(), bank.frames.end(),
              [](const Frame& a, const Frame& b) { return a.timestamp < b.timestamp; });
    return bank;
  }

  // Greedy selection with incrementally maintained penalty terms. Candidates
  // are scanned in ascending timestamp order with a strict ">" update, which
  // realizes the lowest-timestamp tie-break. Output-equivalent to rescoring
  // every candidate from scratch at each step.
  std::vector<const Frame*> cands(n);
  for (std::size_t i = 0; i < n; ++i) cands[i] = &pool.frames[i];
  std::sort(cands.begin(), cands.end(),
            [](const Frame* a, const Frame* b) { return a->timestamp < b->timestamp; });

  std::vector<double> relevance(n);
  for (std::size_t i = 0; i < n; ++i) relevance[i] = sim_sem(*cands[i], instruction);

  std::vector<double> max_vis(n, 0.0);
  std::vector<long long> min_gap(n, std::numeric_limits<long long>::max());
  std::vector<bool> selected(n, false);
  std::size_t selected_count = 0;

  while (selected_count < static_cast<std::size_t>(p.k)) {
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      const double vis = selected_count == 0 ? 0.0 : max_vis[i];
      const double temp =
          selected_count == 0 ? 0.0 : 1.0 / (static_cast<double>(min_gap[i]) + p.epsilon);
      const double score =
          p.lambda_r * relevance[i] - (1.0 - p.lambda_r) * (p.w_v * vis + p.w_t * temp);
      if (score > best_score) {
        best_score = score;
        best_i = i;
      }
    }
    if (best_i == n) break;
    selected[best_i] = true;
    ++selected_count;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      const double c = cosine(cands[i]->embedding, cands[best_i]->embedding);
      if (selected_count == 1 || c > max_vis[i]) max_vis[i] = c;
      const long long gap = std::llabs(
          static_cast<long long>(cands[i]->timestamp) - cands[best_i]->timestamp);
      min_gap[i] = std::min(min_gap[i], gap);
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    if (selected[i]) bank.frames.push_back(*cands[i]);
  return bank;
}

MemoryBank uniform_sample(const CandidatePool& pool, int k) {
  if (k < 1) throw std::invalid_argument("uniform_sample: k must be >= 1");
  MemoryBank bank;
  bank.capacity = k;
  const std::size_t n = pool.frames.size();
  if (n == 0) return bank;

  std::vector<const Frame*> cands(n);
  for (std::size_t i = 0; i < n; ++i) cands[i] = &pool.frames[i];
  std::sort(cands.begin(), cands.end(),
            [](const Frame* a, const Frame* b) { return a->timestamp < b->timestamp; });

  if (n <= static_cast<std::size_t>(k)) {
    for (const Frame* f : cands) bank.frames.push_back(*f);
    return bank;
  }
  if (k == 1) {
    bank.frames.push_back(*cands[0]);
    return bank;
  }
  for (int j = 0; j < k; ++j) {
    const double pos = static_cast<double>(j) * (n - 1) / (k - 1);
    bank.frames.push_back(*cands[static_cast<std::size_t>(std::llround(pos))]);
  }
  return bank;
}

void stream_push(StreamState& st, Frame frame) {
  int latest = std::numeric_limits<int>::min();
  if (!st.pool.frames.empty()) latest = st.pool.frames.back().timestamp;
  if (!st.recent.empty()) latest = std::max(latest, st.recent.back().timestamp);
  if (frame.timestamp <= latest &&
      (!st.pool.frames.empty() || !st.recent.empty()))
    throw std::invalid_argument("stream_push: non-monotonic timestamp");

  st.recent.push_back(std::move(frame));
  if (st.recent.size() > static_cast<std::size_t>(st.recent_capacity)) {
    st.pool.frames.push_back(std::move(st.recent.front()));
    st.recent.erase(st.recent.begin());
  }
}

void update_online(StreamState& st, Frame frame,
                   std::span<const double> instruction, const RefineParams& p) {
  stream_push(st, std::move(frame));
  st.bank = refine(st.pool, instruction, p);
}

}  // namespace deconav
