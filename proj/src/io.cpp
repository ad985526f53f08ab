#include "deconav/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace deconav::io {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json header_line(const std::string& kind, const std::string& fingerprint) {
  json h;
  h["schema"] = kSchemaVersion;
  h["type"] = "header";
  h["kind"] = kind;
  h["fingerprint"] = fingerprint;
  return h;
}

json read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("io: empty file " + path.string());
  json h = json::parse(line);
  if (h.value("schema", "") != kSchemaVersion)
    throw std::runtime_error("io: unsupported schema in " + path.string());
  if (h.value("type", "") != "header")
    throw std::runtime_error("io: missing header line in " + path.string());
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path.string());
  return in;
}

json pose_to_json_rounded(const AgentState& s) {
  return json::array({round3(s.x), round3(s.y), round3(s.heading)});
}

json pose_to_json(const AgentState& s) {
  return json::array({s.x, s.y, s.heading});
}

AgentState pose_from_json(const json& j) {
  AgentState s;
  s.x = j.at(0).get<double>();
  s.y = j.at(1).get<double>();
  s.heading = j.at(2).get<double>();
  return s;
}

json episode_to_json(const Episode& e) {
  json j;
  j["schema"] = kSchemaVersion;
  j["type"] = "episode";
  j["id"] = e.id;
  j["world_seed"] = e.world_seed;
  j["start"] = pose_to_json_rounded(e.start);
  j["goal"] = json::array({round3(e.goal.x), round3(e.goal.y)});
  json path = json::array();
  for (const AgentState& s : e.expert_path) path.push_back(pose_to_json_rounded(s));
  j["expert_path"] = std::move(path);
  j["waypoints"] = e.instruction.waypoint_landmark_ids;
  j["text"] = e.instruction.text_form;
  j["embedding"] = e.instruction.embedding;
  j["shortest_geodesic_length"] = e.shortest_geodesic_length;
  return j;
}

Episode episode_from_json(const json& j) {
  Episode e;
  e.id = j.at("id").get<int>();
  e.world_seed = j.at("world_seed").get<std::uint64_t>();
  e.start = pose_from_json(j.at("start"));
  e.goal = {j.at("goal").at(0).get<double>(), j.at("goal").at(1).get<double>()};
  for (const json& p : j.at("expert_path")) e.expert_path.push_back(pose_from_json(p));
  e.instruction.waypoint_landmark_ids = j.at("waypoints").get<std::vector<int>>();
  e.instruction.text_form = j.at("text").get<std::string>();
  e.instruction.embedding = j.at("embedding").get<std::vector<double>>();
  e.shortest_geodesic_length = j.at("shortest_geodesic_length").get<double>();
  return e;
}

}  // namespace

double round3(double x) { return std::llround(x * 1000.0) / 1000.0; }

std::string fingerprint_of(const std::string& canonical_json) {
  return hex64(fnv1a(canonical_json));
}

std::string file_fingerprint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return "";
  std::ifstream in = open_in(path);
  json h = read_header(in, path);
  return h.value("fingerprint", "");
}

bool can_reuse_or_clear(const std::filesystem::path& path,
                        const std::string& fingerprint, bool force) {
  if (!std::filesystem::exists(path)) return false;
  const std::string existing = file_fingerprint(path);
  if (existing == fingerprint) return true;
  if (!force)
    throw std::runtime_error(
        "io: refusing to overwrite " + path.string() +
        " (fingerprint mismatch; pass force to replace it)");
  std::filesystem::remove(path);
  return false;
}

void save_world_file(const std::filesystem::path& path, const GridWorld& world,
                     const std::string& fingerprint) {
  std::ofstream out = open_out(path);
  out << header_line("worlds", fingerprint).dump() << "\n";

  json j;
  j["schema"] = kSchemaVersion;
  j["type"] = "world";
  j["seed"] = world.seed();
  const WorldGenParams& p = world.params();
  json params;
  params["width_cells"] = p.width_cells;
  params["height_cells"] = p.height_cells;
  params["cell_size"] = p.cell_size;
  params["room_count"] = p.room_count;
  params["corridor_width"] = p.corridor_width;
  params["landmark_count"] = p.landmark_count;
  params["category_count"] = p.category_count;
  params["fov_degrees"] = p.fov_degrees;
  params["view_range"] = p.view_range;
  params["success_radius"] = p.success_radius;
  params["embedding_dim"] = p.embedding_dim;
  j["params"] = std::move(params);

  // Run-length encoding, row-major, runs alternate starting with "free".
  json rle = json::array();
  const std::vector<bool>& occ = world.occupancy();
  bool value = false;
  std::size_t run = 0;
  for (bool b : occ) {
    if (b == value) {
      ++run;
    } else {
      rle.push_back(run);
      value = b;
      run = 1;
    }
  }
  rle.push_back(run);
  j["occupancy_rle"] = std::move(rle);

  json lms = json::array();
  for (const Landmark& lm : world.landmarks()) {
    json l;
    l["id"] = lm.id;
    l["category"] = lm.category;
    l["cell"] = json::array({lm.col, lm.row});
    lms.push_back(std::move(l));
  }
  j["landmarks"] = std::move(lms);
  out << j.dump() << "\n";
}

GridWorld load_world_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  read_header(in, path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("io: missing world record in " + path.string());
  json j = json::parse(line);
  if (j.value("type", "") != "world")
    throw std::runtime_error("io: expected a world record in " + path.string());

  const json& pj = j.at("params");
  WorldGenParams p;
  p.width_cells = pj.at("width_cells").get<int>();
  p.height_cells = pj.at("height_cells").get<int>();
  p.cell_size = pj.at("cell_size").get<double>();
  p.room_count = pj.at("room_count").get<int>();
  p.corridor_width = pj.at("corridor_width").get<int>();
  p.landmark_count = pj.at("landmark_count").get<int>();
  p.category_count = pj.at("category_count").get<int>();
  p.fov_degrees = pj.at("fov_degrees").get<double>();
  p.view_range = pj.at("view_range").get<double>();
  p.success_radius = pj.at("success_radius").get<double>();
  p.embedding_dim = pj.at("embedding_dim").get<int>();

  std::vector<bool> occ;
  occ.reserve(static_cast<std::size_t>(p.width_cells) * p.height_cells);
  bool value = false;
  for (const json& r : j.at("occupancy_rle")) {
    const std::size_t run = r.get<std::size_t>();
    occ.insert(occ.end(), run, value);
    value = !value;
  }

  std::vector<Landmark> landmarks;
  for (const json& l : j.at("landmarks")) {
    Landmark lm;
    lm.id = l.at("id").get<int>();
    lm.category = l.at("category").get<int>();
    lm.col = l.at("cell").at(0).get<int>();
    lm.row = l.at("cell").at(1).get<int>();
    landmarks.push_back(lm);
  }
  return GridWorld(p, j.at("seed").get<std::uint64_t>(), std::move(occ),
                   std::move(landmarks));
}

void save_episodes_file(const std::filesystem::path& path,
                        std::span<const Episode> episodes,
                        const std::string& fingerprint) {
  std::ofstream out = open_out(path);
  out << header_line("episodes", fingerprint).dump() << "\n";
  for (const Episode& e : episodes) out << episode_to_json(e).dump() << "\n";
}

std::vector<Episode> load_episodes_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  read_header(in, path);
  std::vector<Episode> episodes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    episodes.push_back(episode_from_json(json::parse(line)));
  }
  return episodes;
}

void save_pairs_file(const std::filesystem::path& path,
                     const CorrectionDataset& dataset,
                     const std::string& fingerprint) {
  std::ofstream out = open_out(path);
  json h = header_line("pairs", fingerprint);
  json prov;
  prov["schema"] = dataset.provenance.schema;
  prov["policy_id"] = dataset.provenance.policy_id;
  prov["tau"] = dataset.provenance.tau;
  prov["seeds"] = dataset.provenance.seeds;
  h["provenance"] = std::move(prov);
  json logs = json::array();
  for (const EpisodeCollectionLog& log : dataset.logs) {
    json l;
    l["episode_id"] = log.episode_id;
    l["steps"] = log.steps;
    if (log.aborted_at) l["aborted_at"] = *log.aborted_at;
    l["success"] = log.success;
    l["pairs"] = log.pairs;
    logs.push_back(std::move(l));
  }
  h["logs"] = std::move(logs);
  out << h.dump() << "\n";

  for (const StateActionPair& pair : dataset.pairs) {
    json j;
    j["schema"] = kSchemaVersion;
    j["type"] = "pair";
    j["episode_id"] = pair.episode_id;
    j["step"] = pair.step_index;
    j["pose"] = pose_to_json(pair.state);
    j["action"] = action_name(pair.expert_action);
    j["t"] = pair.frame.timestamp;
    j["embedding"] = pair.frame.embedding;
    j["deviation"] = pair.deviation;
    out << j.dump() << "\n";
  }
}

CorrectionDataset load_pairs_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path);
  CorrectionDataset dataset;
  if (h.contains("provenance")) {
    const json& prov = h.at("provenance");
    dataset.provenance.schema = prov.value("schema", kSchemaVersion);
    dataset.provenance.policy_id = prov.value("policy_id", "");
    dataset.provenance.tau = prov.value("tau", 0.0);
    dataset.provenance.seeds =
        prov.value("seeds", std::vector<std::uint64_t>{});
  }
  if (h.contains("logs")) {
    for (const json& l : h.at("logs")) {
      EpisodeCollectionLog log;
      log.episode_id = l.at("episode_id").get<int>();
      log.steps = l.at("steps").get<int>();
      if (l.contains("aborted_at")) log.aborted_at = l.at("aborted_at").get<int>();
      log.success = l.at("success").get<bool>();
      log.pairs = l.at("pairs").get<int>();
      dataset.logs.push_back(log);
    }
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("schema", "") != kSchemaVersion)
      throw std::runtime_error("io: pair record schema mismatch in " + path.string());
    StateActionPair pair;
    pair.episode_id = j.at("episode_id").get<int>();
    pair.step_index = j.at("step").get<int>();
    pair.state = pose_from_json(j.at("pose"));
    pair.expert_action = action_from_name(j.at("action").get<std::string>());
    pair.frame.timestamp = j.at("t").get<int>();
    pair.frame.embedding = j.at("embedding").get<std::vector<double>>();
    pair.frame.pose_snapshot = pair.state;
    pair.deviation = j.at("deviation").get<double>();
    dataset.pairs.push_back(std::move(pair));
  }
  return dataset;
}

std::string policy_checksum(const PolicyParams& params) {
  std::string bytes;
  bytes.reserve(1024);
  auto push_double = [&bytes](double v) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    bytes.append(buf, sizeof(double));
  };
  push_double(static_cast<double>(params.feature_dim));
  push_double(static_cast<double>(params.init_seed));
  for (int j = 0; j < kChunkLength; ++j) {
    for (double w : params.weights[j]) push_double(w);
    for (double b : params.biases[j]) push_double(b);
  }
  return hex64(fnv1a(bytes));
}

void save_policy_file(const std::filesystem::path& path,
                      const PolicyParams& params,
                      const std::string& fingerprint) {
  params.validate();
  std::ofstream out = open_out(path);
  json j = header_line("policy", fingerprint);
  j["feature_dim"] = params.feature_dim;
  j["init_seed"] = params.init_seed;
  json weights = json::array();
  json biases = json::array();
  for (int h = 0; h < kChunkLength; ++h) {
    weights.push_back(params.weights[h]);
    biases.push_back(params.biases[h]);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["checksum"] = policy_checksum(params);
  out << j.dump() << "\n";
}

PolicyParams load_policy_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j = read_header(in, path);
  if (j.value("kind", "") != "policy")
    throw std::runtime_error("io: not a policy checkpoint: " + path.string());
  PolicyParams p;
  p.feature_dim = j.at("feature_dim").get<int>();
  p.init_seed = j.at("init_seed").get<std::uint64_t>();
  for (int h = 0; h < kChunkLength; ++h) {
    p.weights[h] = j.at("weights").at(h).get<std::vector<double>>();
    const auto bias = j.at("biases").at(h).get<std::vector<double>>();
    if (bias.size() != kActionCount)
      throw std::runtime_error("io: bias shape mismatch in " + path.string());
    for (int a = 0; a < kActionCount; ++a) p.biases[h][a] = bias[a];
  }
  p.validate();
  const std::string expected = j.at("checksum").get<std::string>();
  if (policy_checksum(p) != expected)
    throw std::runtime_error("io: checkpoint checksum mismatch in " + path.string());
  return p;
}

struct TraceWriter::Impl {
  std::ofstream out;
  int episode_id = -1;
};

TraceWriter::TraceWriter(const std::filesystem::path& path,
                         const std::string& fingerprint)
    : impl_(new Impl) {
  impl_->out = open_out(path);
  impl_->out << header_line("trace", fingerprint).dump() << "\n";
}

TraceWriter::~TraceWriter() { delete impl_; }

void TraceWriter::begin_episode(int episode_id) { impl_->episode_id = episode_id; }

void TraceWriter::write(const TraceStep& step) {
  json j;
  j["schema"] = kSchemaVersion;
  j["type"] = "trace_step";
  j["episode_id"] = impl_->episode_id;
  j["t"] = step.t;
  j["pose"] = pose_to_json_rounded(step.state);
  j["action"] = action_name(step.action);
  j["bank_ts"] = step.bank_timestamps;
  impl_->out << j.dump() << "\n";
}

}  // namespace deconav::io
