#include "deconav/episode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deconav {
namespace {

const char* kCategoryNames[] = {
    "lamp",  "desk",   "plant",  "sofa",    "shelf",  "door",
    "sign",  "bench",  "crate",  "pillar",  "screen", "rack",
    "stool", "locker", "window", "counter",
};

std::string category_name(int category) {
  constexpr int n = static_cast<int>(sizeof(kCategoryNames) / sizeof(char*));
  std::string name = kCategoryNames[category % n];
  if (category >= n) name += "-" + std::to_string(category / n);
  return name;
}

std::string instruction_text(const GridWorld& world,
                             std::span<const int> waypoint_ids) {
  std::string text = "Go";
  for (std::size_t i = 0; i < waypoint_ids.size(); ++i) {
    const Landmark& lm = world.landmark_by_id(waypoint_ids[i]);
    text += (i == 0 ? " past the " : ", then past the ") + category_name(lm.category);
  }
  text += " and stop there.";
  return text;
}

/// Point at a given arc-length fraction along the path polyline.
Vec2 point_at_fraction(std::span<const AgentState> path, double fraction) {
  const double total = path_length(path);
  if (path.size() == 1 || total <= 0.0) return {path[0].x, path[0].y};
  double target = fraction * total;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a{path[i].x, path[i].y};
    const Vec2 b{path[i + 1].x, path[i + 1].y};
    const double seg = distance(a, b);
    if (target <= seg || i + 2 == path.size()) {
      const double t = seg > 0.0 ? std::min(1.0, target / seg) : 0.0;
      return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
    }
    target -= seg;
  }
  return {path.back().x, path.back().y};
}

std::vector<int> pick_waypoints(const GridWorld& world,
                                std::span<const AgentState> path, int count) {
  std::vector<int> ids;
  for (int k = 0; k < count; ++k) {
    const double fraction = static_cast<double>(k + 1) / count;
    const Vec2 p = point_at_fraction(path, fraction);
    int best_id = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const Landmark& lm : world.landmarks()) {
      const double d = distance(p, world.cell_center(lm.col, lm.row));
      if (d < best_d) {
        best_d = d;
        best_id = lm.id;
      }
    }
    if (best_id >= 0 && (ids.empty() || ids.back() != best_id))
      ids.push_back(best_id);
  }
  return ids;
}

Instruction build_instruction(const GridWorld& world, std::vector<int> ids) {
  Instruction ins;
  ins.embedding = instruction_embedding(world, ids);
  ins.text_form = instruction_text(world, ids);
  ins.waypoint_landmark_ids = std::move(ids);
  return ins;
}

}  // namespace

double path_length(std::span<const AgentState> path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    total += std::hypot(path[i + 1].x - path[i].x, path[i + 1].y - path[i].y);
  return total;
}

Episode generate_episode(const GridWorld& world, std::uint64_t seed, int id,
                         const EpisodeGenParams& params) {
  if (world.landmarks().size() < 2)
    throw std::invalid_argument("generate_episode: world needs >= 2 landmarks");

  // Free cells of the world, deterministic scan order.
  std::vector<int> free_cells;
  for (int row = 0; row < world.height(); ++row)
    for (int col = 0; col < world.width(); ++col)
      if (!world.blocked(col, row)) free_cells.push_back(world.cell_index(col, row));

  Rng rng(derive_seed(world.seed() ^ seed, "episode", static_cast<std::uint64_t>(id)));
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    const int start_cell = free_cells[rng.next_below(free_cells.size())];
    const int goal_cell = free_cells[rng.next_below(free_cells.size())];
    const Vec2 start_pos = world.cell_center(start_cell % world.width(),
                                             start_cell / world.width());
    const Vec2 goal_pos = world.cell_center(goal_cell % world.width(),
                                            goal_cell / world.width());
    const double sep = geodesic_distance(world, start_pos, goal_pos);
    if (sep < params.min_separation || sep > params.max_separation) continue;

    AgentState start;
    start.x = start_pos.x;
    start.y = start_pos.y;
    start.heading = 0.0;
    std::vector<AgentState> path = shortest_path(world, start, goal_pos);
    if (path.size() < 2) continue;

    const int waypoint_count = rng.uniform_int(2, 5);
    std::vector<int> ids = pick_waypoints(world, path, waypoint_count);
    if (ids.size() < 2) continue;

    Episode e;
    e.id = id;
    e.world_seed = world.seed();
    e.start = path.front();
    e.goal = {path.back().x, path.back().y};
    e.shortest_geodesic_length = geodesic_distance(world, start_pos, e.goal);
    e.expert_path = std::move(path);
    e.instruction = build_instruction(world, std::move(ids));
    return e;
  }
  throw std::runtime_error("generate_episode: sampling failed after retries");
}

Episode reverse_episode(const GridWorld& world, const Episode& e) {
  Episode r;
  r.id = e.id;
  r.world_seed = e.world_seed;
  r.expert_path.reserve(e.expert_path.size());
  for (auto it = e.expert_path.rbegin(); it != e.expert_path.rend(); ++it) {
    AgentState s = *it;
    s.heading = wrap_degrees(s.heading + 180.0);
    r.expert_path.push_back(s);
  }
  r.start = r.expert_path.front();
  r.goal = {r.expert_path.back().x, r.expert_path.back().y};
  r.shortest_geodesic_length =
      geodesic_distance(world, {r.start.x, r.start.y}, r.goal);

  std::vector<int> ids(e.instruction.waypoint_landmark_ids.rbegin(),
                       e.instruction.waypoint_landmark_ids.rend());
  r.instruction = build_instruction(world, std::move(ids));
  return r;
}

Episode stitch_episodes(const GridWorld& world, const Episode& e1,
                        const Episode& e2, double max_gap) {
  if (e1.world_seed != e2.world_seed || e1.world_seed != world.seed())
    throw std::invalid_argument("stitch_episodes: episodes from different worlds");
  const Vec2 gap_from = e1.goal;
  const Vec2 gap_to{e2.start.x, e2.start.y};
  const double gap = geodesic_distance(world, gap_from, gap_to);
  if (gap > max_gap)
    throw std::invalid_argument("stitch_episodes: gap exceeds max_gap");

  Episode s;
  s.id = e1.id;
  s.world_seed = e1.world_seed;
  s.expert_path = e1.expert_path;

  if (gap > 0.0) {
    // Connector states, skipping duplicated junction cells.
    AgentState junction = e1.expert_path.back();
    std::vector<AgentState> connector;
    const double direct = distance(gap_from, gap_to);
    if (direct > 1e-9) {
      // shortest_path returns {start} when already within the success radius;
      // walk the cell chain explicitly instead so short connectors still
      // produce intermediate states.
      const DistanceField to_goal = DistanceField::from_point(world, gap_to);
      Vec2 cur = gap_from;
      auto [ccol, crow] = world.cell_of(cur);
      auto [gcol, grow] = world.cell_of(gap_to);
      while (ccol != gcol || crow != grow) {
        int best_col = ccol;
        int best_row = crow;
        double best = std::numeric_limits<double>::infinity();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nc = ccol + dc;
            const int nr = crow + dr;
            if (world.blocked(nc, nr)) continue;
            const double d = to_goal.at_cell(world.cell_index(nc, nr)) +
                             ((dc == 0 || dr == 0) ? 1.0 : M_SQRT2) *
                                 world.cell_size();
            if (d < best) {
              best = d;
              best_col = nc;
              best_row = nr;
            }
          }
        }
        if (best_col == ccol && best_row == crow)
          throw std::runtime_error("stitch_episodes: connector walk stalled");
        ccol = best_col;
        crow = best_row;
        AgentState st;
        const Vec2 center = world.cell_center(ccol, crow);
        st.x = center.x;
        st.y = center.y;
        connector.push_back(st);
      }
      for (std::size_t i = 0; i < connector.size(); ++i) {
        const Vec2 prev = i == 0 ? Vec2{junction.x, junction.y}
                                 : Vec2{connector[i - 1].x, connector[i - 1].y};
        connector[i].heading = wrap_degrees(rad_to_deg(
            std::atan2(connector[i].y - prev.y, connector[i].x - prev.x)));
      }
    }
    for (const AgentState& st : connector) s.expert_path.push_back(st);
  }

  for (const AgentState& st : e2.expert_path) {
    if (!s.expert_path.empty() &&
        distance({st.x, st.y},
                 {s.expert_path.back().x, s.expert_path.back().y}) < 1e-9)
      continue;
    s.expert_path.push_back(st);
  }

  s.start = s.expert_path.front();
  s.goal = e2.goal;
  // Reference length for a forced-waypoint task: both legs plus the connector.
  s.shortest_geodesic_length =
      e1.shortest_geodesic_length + gap + e2.shortest_geodesic_length;

  std::vector<int> ids = e1.instruction.waypoint_landmark_ids;
  for (int id : e2.instruction.waypoint_landmark_ids)
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  s.instruction = build_instruction(world, std::move(ids));
  return s;
}

}  // namespace deconav
