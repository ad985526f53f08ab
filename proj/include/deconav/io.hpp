#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deconav/correction.hpp"
#include "deconav/episode.hpp"
#include "deconav/evalrun.hpp"
#include "deconav/policy.hpp"
#include "deconav/world.hpp"

namespace deconav::io {

inline constexpr const char* kSchemaVersion = "v1";

/// Hex fingerprint of a canonical JSON dump (sorted keys).
std::string fingerprint_of(const std::string& canonical_json);

/// Fingerprint stored in the header line of an existing artifact, or an empty
/// string if the file does not exist.
std::string file_fingerprint(const std::filesystem::path& path);

/// Overwrite guard: refuses to clobber an artifact whose embedded fingerprint
/// differs from the expected one unless force is set. Returns true when the
/// artifact already exists with a matching fingerprint (callers may resume).
bool can_reuse_or_clear(const std::filesystem::path& path,
                        const std::string& fingerprint, bool force);

// World and episode files: one header line carrying the fingerprint, then one
// record per entity. Occupancy is run-length encoded; poses are written with
// 3-decimal fixed precision.
void save_world_file(const std::filesystem::path& path, const GridWorld& world,
                     const std::string& fingerprint);
GridWorld load_world_file(const std::filesystem::path& path);

void save_episodes_file(const std::filesystem::path& path,
                        std::span<const Episode> episodes,
                        const std::string& fingerprint);
std::vector<Episode> load_episodes_file(const std::filesystem::path& path);

// Correction/demonstration pair files share one schema: a header line with
// provenance, then one pair per line. Poses are stored at full precision so
// deviations can be re-verified exactly from the file.
void save_pairs_file(const std::filesystem::path& path,
                     const CorrectionDataset& dataset,
                     const std::string& fingerprint);
CorrectionDataset load_pairs_file(const std::filesystem::path& path);

// Policy checkpoints: shapes, seed and row-major weights with an integrity
// checksum over the weight bytes; loading verifies the checksum.
void save_policy_file(const std::filesystem::path& path,
                      const PolicyParams& params,
                      const std::string& fingerprint);
PolicyParams load_policy_file(const std::filesystem::path& path);
std::string policy_checksum(const PolicyParams& params);

/// Streaming trace writer (JSON Lines, one step per line).
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, const std::string& fingerprint);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void begin_episode(int episode_id);
  void write(const TraceStep& step);

 private:
  struct Impl;
  Impl* impl_;
};

double round3(double x);

}  // namespace deconav::io
