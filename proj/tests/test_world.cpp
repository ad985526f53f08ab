#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "deconav/episode.hpp"
#include "deconav/world.hpp"
#include "oracles.hpp"

using namespace deconav;

namespace {

// Open room with a blocked border; landmarks given as (col, row, category).
GridWorld open_room(int side, std::vector<std::array<int, 3>> lm_cells,
                    std::uint64_t seed = 42) {
  WorldGenParams p;
  p.width_cells = side;
  p.height_cells = side;
  p.landmark_count = static_cast<int>(lm_cells.size());
  std::vector<bool> occ(static_cast<std::size_t>(side) * side, false);
  for (int i = 0; i < side; ++i) {
    occ[i] = occ[static_cast<std::size_t>(side) * (side - 1) + i] = true;
    occ[static_cast<std::size_t>(side) * i] = occ[static_cast<std::size_t>(side) * i + side - 1] = true;
  }
  std::vector<Landmark> lms;
  int id = 0;
  for (const auto& [col, row, cat] : lm_cells)
    lms.push_back({id++, cat, col, row});
  return GridWorld(p, seed, std::move(occ), std::move(lms));
}

GridWorld random_grid(std::uint64_t seed, int side = 32, double p_block = 0.35) {
  WorldGenParams p;
  p.width_cells = side;
  p.height_cells = side;
  p.landmark_count = 0;
  Rng rng(seed);
  std::vector<bool> occ(static_cast<std::size_t>(side) * side, false);
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = rng.next_double() < p_block;
  return GridWorld(p, seed, std::move(occ), {});
}

std::vector<int> free_cells(const GridWorld& w) {
  std::vector<int> cells;
  for (int r = 0; r < w.height(); ++r)
    for (int c = 0; c < w.width(); ++c)
      if (!w.blocked(c, r)) cells.push_back(w.cell_index(c, r));
  return cells;
}

}  // namespace

TEST_CASE("world generation is deterministic and seed-sensitive") {
  WorldGenParams params;
  const GridWorld a = generate_world(7, params);
  const GridWorld b = generate_world(7, params);
  CHECK(a.occupancy() == b.occupancy());
  REQUIRE(a.landmarks().size() == b.landmarks().size());
  for (std::size_t i = 0; i < a.landmarks().size(); ++i) {
    CHECK(a.landmarks()[i].col == b.landmarks()[i].col);
    CHECK(a.landmarks()[i].category == b.landmarks()[i].category);
  }

  const GridWorld c = generate_world(8, params);
  CHECK(a.occupancy() != c.occupancy());

  WorldGenParams no_lm = params;
  no_lm.landmark_count = 0;
  CHECK(generate_world(7, no_lm).landmarks().empty());
}

TEST_CASE("generated free space is one geodesic component with landmarks on it") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const GridWorld w = generate_world(seed, WorldGenParams{});
    for (const Landmark& lm : w.landmarks()) CHECK_FALSE(w.blocked(lm.col, lm.row));
    // Every landmark reaches landmark 0.
    const Vec2 anchor = w.cell_center(w.landmarks()[0].col, w.landmarks()[0].row);
    for (const Landmark& lm : w.landmarks())
      CHECK(std::isfinite(geodesic_distance(w, anchor, w.cell_center(lm.col, lm.row))));
  }
}

TEST_CASE("step semantics") {
  const GridWorld w = open_room(16, {});
  const ActuationNoise off;

  AgentState s{1.0, 1.0, 0.0};
  const AgentState fwd = step(w, s, Action::MoveForward, off);
  CHECK(fwd.x == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(fwd.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fwd.heading == 0.0);

  AgentState t{1.0, 1.0, 90.0};
  CHECK(step(w, t, Action::TurnLeft, off).heading == doctest::Approx(105.0));
  CHECK(step(w, t, Action::TurnRight, off).heading == doctest::Approx(75.0));

  const AgentState stopped = step(w, s, Action::Stop, off);
  CHECK(stopped.x == s.x);
  CHECK(stopped.heading == s.heading);

  // Wall directly ahead: the border cell at x < 0.25.
  AgentState facing_wall{0.3, 1.0, 180.0};
  const AgentState blocked = step(w, facing_wall, Action::MoveForward, off);
  CHECK(blocked.x == facing_wall.x);
  CHECK(blocked.y == facing_wall.y);
}

TEST_CASE("step noise is bounded and seed-deterministic") {
  const GridWorld w = open_room(16, {});
  ActuationNoise noise;
  noise.enabled = true;
  Rng r1(99), r2(99);
  for (int i = 0; i < 50; ++i) {
    AgentState s{2.0, 2.0, 37.0};
    const AgentState a = step(w, s, Action::MoveForward, noise, &r1);
    const AgentState b = step(w, s, Action::MoveForward, noise, &r2);
    CHECK(a.x == b.x);
    const double moved = std::hypot(a.x - s.x, a.y - s.y);
    CHECK(moved >= kStepMeters * 0.8 - 1e-9);
    CHECK(moved <= kStepMeters * 1.2 + 1e-9);
    const AgentState turn = step(w, s, Action::TurnLeft, noise, &r1);
    const AgentState turn2 = step(w, s, Action::TurnLeft, noise, &r2);
    CHECK(turn.heading == turn2.heading);
    const double delta = signed_angle_delta(turn.heading, s.heading);
    CHECK(delta >= 12.0 - 1e-9);
    CHECK(delta <= 18.0 + 1e-9);
  }
}

TEST_CASE("geodesic basics") {
  const GridWorld w = open_room(16, {});
  const Vec2 a{1.125, 1.125};
  CHECK(geodesic_distance(w, a, a) == 0.0);
  CHECK(geodesic_distance(w, a, {1.375, 1.125}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(geodesic_distance(w, a, {0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(geodesic_distance(w, {-1.0, 0.5}, a), std::invalid_argument);
}

TEST_CASE("geodesic matches the scan-based oracle on random grids") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GridWorld w = random_grid(1000 + seed);
    const std::vector<int> cells = free_cells(w);
    REQUIRE(cells.size() > 4);
    Rng rng(seed);
    for (int trial = 0; trial < 20; ++trial) {
      const int ca = cells[rng.next_below(cells.size())];
      const int cb = cells[rng.next_below(cells.size())];
      const Vec2 a = w.cell_center(ca % w.width(), ca / w.width());
      const Vec2 b = w.cell_center(cb % w.width(), cb / w.width());
      const double got = geodesic_distance(w, a, b);
      const double want = oracle::naive_geodesic(w, a, b);
      if (std::isinf(want))
        CHECK(std::isinf(got));
      else
        CHECK(got == want);  // bit-exact by construction
    }
  }
}

TEST_CASE("geodesic symmetry is exact and triangle inequality holds with slack") {
  const GridWorld w = random_grid(77);
  const std::vector<int> cells = free_cells(w);
  Rng rng(5);
  auto center = [&](int idx) { return w.cell_center(idx % w.width(), idx / w.width()); };
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 a = center(cells[rng.next_below(cells.size())]);
    const Vec2 b = center(cells[rng.next_below(cells.size())]);
    const Vec2 c = center(cells[rng.next_below(cells.size())]);
    const double ab = geodesic_distance(w, a, b);
    CHECK(ab == geodesic_distance(w, b, a));
    const double ac = geodesic_distance(w, a, c);
    const double bc = geodesic_distance(w, b, c);
    if (std::isfinite(ab) && std::isfinite(ac) && std::isfinite(bc))
      CHECK(ac <= ab + bc + 2.0 * w.cell_size() + 1e-9);
  }
}

TEST_CASE("shortest_path length and shape") {
  const GridWorld w = open_room(40, {});
  AgentState start{1.125, 1.125, 0.0};

  // Goal already inside the success radius.
  const auto trivial = shortest_path(w, start, {2.125, 1.125});
  REQUIRE(trivial.size() == 1);
  CHECK(trivial[0].x == start.x);

  // Straight corridor: collinear waypoints.
  const auto straight = shortest_path(w, start, {8.125, 1.125});
  REQUIRE(straight.size() > 2);
  for (const AgentState& s : straight) CHECK(s.y == doctest::Approx(1.125));
  CHECK(path_length(straight) ==
        doctest::Approx(geodesic_distance(w, {start.x, start.y}, {8.125, 1.125}))
            .epsilon(1e-12));
  CHECK(straight.front().heading == doctest::Approx(0.0));

  // L-shaped world: length within one cell of the geodesic.
  WorldGenParams p;
  p.width_cells = 40;
  p.height_cells = 40;
  p.landmark_count = 0;
  std::vector<bool> occ(40 * 40, true);
  for (int c = 1; c < 39; ++c) occ[static_cast<std::size_t>(1) * 40 + c] = false;
  for (int r = 1; r < 39; ++r) occ[static_cast<std::size_t>(r) * 40 + 38] = false;
  GridWorld lworld(p, 9, std::move(occ), {});
  AgentState ls{0.375, 0.375, 0.0};
  const Vec2 lgoal = lworld.cell_center(38, 38);
  const auto lpath = shortest_path(lworld, ls, lgoal);
  const double lgeo = geodesic_distance(lworld, {ls.x, ls.y}, lgoal);
  CHECK(std::abs(path_length(lpath) - lgeo) <= lworld.cell_size() + 1e-9);
  CHECK(lpath.back().x == doctest::Approx(lgoal.x));
  CHECK(lpath.back().y == doctest::Approx(lgoal.y));

  // Two rooms split by a full wall: the far side is unreachable.
  WorldGenParams sp;
  sp.width_cells = 40;
  sp.height_cells = 40;
  sp.landmark_count = 0;
  std::vector<bool> split(40 * 40, false);
  for (int i = 0; i < 40; ++i) {
    split[i] = split[static_cast<std::size_t>(40) * 39 + i] = true;
    split[static_cast<std::size_t>(40) * i] = split[static_cast<std::size_t>(40) * i + 39] = true;
    split[static_cast<std::size_t>(40) * i + 20] = true;
  }
  GridWorld sworld(sp, 11, std::move(split), {});
  CHECK(std::isinf(geodesic_distance(sworld, {1.125, 1.125}, {8.125, 1.125})));
  CHECK_THROWS_AS(shortest_path(sworld, AgentState{1.125, 1.125, 0.0},
                                Vec2{8.125, 1.125}),
                  std::runtime_error);
}

TEST_CASE("observe is pure and matches a direct formula evaluation") {
  // One landmark of category 3, dead ahead at exactly 1.0 m.
  const GridWorld w = open_room(24, {{12, 8, 3}});
  const Vec2 lm_center = w.cell_center(12, 8);
  AgentState s{lm_center.x - 1.0, lm_center.y, 0.0};

  const Frame f1 = observe(w, s, 5);
  const Frame f2 = observe(w, s, 5);
  CHECK(f1.embedding == f2.embedding);
  CHECK(f1.timestamp == 5);
  CHECK(norm(f1.embedding) == doctest::Approx(1.0).epsilon(1e-9));

  // Direct evaluation of the stacked-feature formula.
  const int cats = w.params().category_count;
  std::vector<double> v(cats + 2, 0.0);
  v[3] = 1.0 / (1.0 + 1.0);  // weight 0.5 at the landmark category
  int total = 0, blocked_count = 0;
  const int radius_cells = static_cast<int>(std::ceil(w.params().view_range / w.cell_size())) + 1;
  const auto [pc, pr] = w.cell_of({s.x, s.y});
  for (int r = pr - radius_cells; r <= pr + radius_cells; ++r)
    for (int c = pc - radius_cells; c <= pc + radius_cells; ++c) {
      if (!w.in_bounds(c, r)) continue;
      const Vec2 cc = w.cell_center(c, r);
      const double d = distance({s.x, s.y}, cc);
      if (d > w.params().view_range || d < 1e-9) continue;
      const double bearing = wrap_degrees(rad_to_deg(std::atan2(cc.y - s.y, cc.x - s.x)));
      if (std::abs(signed_angle_delta(bearing, s.heading)) > w.params().fov_degrees / 2.0)
        continue;
      ++total;
      if (w.blocked(c, r)) ++blocked_count;
    }
  v[cats] = total > 0 ? static_cast<double>(blocked_count) / total : 0.0;
  v[cats + 1] = 0.5 + s.heading / 720.0;
  std::vector<double> expected(w.params().embedding_dim, 0.0);
  for (int i = 0; i < w.params().embedding_dim; ++i)
    for (int j = 0; j < cats + 2; ++j)
      expected[i] += w.projection()[static_cast<std::size_t>(i) * (cats + 2) + j] * v[j];
  normalize(expected);
  for (int i = 0; i < w.params().embedding_dim; ++i)
    CHECK(f1.embedding[i] == doctest::Approx(expected[i]).epsilon(1e-12));

  // Behind a wall or outside the cone, the landmark stops contributing.
  AgentState away{lm_center.x - 1.0, lm_center.y, 180.0};
  const Frame fb = observe(w, away, 0);
  CHECK(norm(fb.embedding) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fb.embedding != f1.embedding);
}

TEST_CASE("instruction embedding construction") {
  const GridWorld w = open_room(24, {{12, 8, 3}, {5, 5, 7}});
  CHECK_THROWS_AS(instruction_embedding(w, {}), std::invalid_argument);
  CHECK_THROWS_AS(instruction_embedding(w, std::vector<int>{99}), std::invalid_argument);

  const std::vector<double> e = instruction_embedding(w, std::vector<int>{0});
  CHECK(norm(e) == doctest::Approx(1.0).epsilon(1e-9));
  const int cats = w.params().category_count;
  std::vector<double> expected(w.params().embedding_dim, 0.0);
  for (int i = 0; i < w.params().embedding_dim; ++i)
    expected[i] = w.projection()[static_cast<std::size_t>(i) * (cats + 2) + 3];
  normalize(expected);
  for (std::size_t i = 0; i < e.size(); ++i)
    CHECK(e[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("frames seeing instructed landmarks score higher relevance") {
  const GridWorld w = generate_world(21, WorldGenParams{});
  Rng rng(4);
  int wins = 0, probes = 0;
  while (probes < 100) {
    const Landmark& lm = w.landmarks()[rng.next_below(w.landmarks().size())];
    const Vec2 lc = w.cell_center(lm.col, lm.row);
    const double angle = rng.uniform(0.0, 360.0);
    const Vec2 pos{lc.x - std::cos(deg_to_rad(angle)), lc.y - std::sin(deg_to_rad(angle))};
    if (pos.x < 0 || pos.y < 0) continue;
    int col, row;
    try {
      std::tie(col, row) = w.cell_of(pos);
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (w.blocked(col, row) || !w.line_of_sight(pos, lc)) continue;

    const std::vector<double> e_i = instruction_embedding(w, std::vector<int>{lm.id});
    AgentState facing{pos.x, pos.y, angle};
    AgentState facing_away{pos.x, pos.y, wrap_degrees(angle + 180.0)};
    const Frame seen = observe(w, facing, 0);
    const Frame unseen = observe(w, facing_away, 0);
    ++probes;
    if (cosine(seen.embedding, e_i) > cosine(unseen.embedding, e_i)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("episode generation: determinism, band, endpoints") {
  const GridWorld w = generate_world(31, WorldGenParams{});
  const Episode a = generate_episode(w, 100, 0);
  const Episode b = generate_episode(w, 100, 0);
  CHECK(a.expert_path.size() == b.expert_path.size());
  CHECK(a.instruction.waypoint_landmark_ids == b.instruction.waypoint_landmark_ids);
  CHECK(a.instruction.embedding == b.instruction.embedding);
  CHECK(a.start.x == b.start.x);

  for (int i = 0; i < 60; ++i) {
    const Episode e = generate_episode(w, 100, i);
    CHECK(e.shortest_geodesic_length >= 5.0);
    CHECK(e.shortest_geodesic_length <= 15.0);
    CHECK(e.instruction.waypoint_landmark_ids.size() >= 2);
    CHECK(e.instruction.waypoint_landmark_ids.size() <= 5);
    const AgentState& last = e.expert_path.back();
    CHECK(geodesic_distance(w, {last.x, last.y}, e.goal) <= w.params().success_radius);
    CHECK(e.expert_path.front().x == e.start.x);
    CHECK(e.expert_path.front().y == e.start.y);
    // Consecutive states within one action's reach (up to quantization).
    for (std::size_t j = 0; j + 1 < e.expert_path.size(); ++j) {
      const double d = std::hypot(e.expert_path[j + 1].x - e.expert_path[j].x,
                                  e.expert_path[j + 1].y - e.expert_path[j].y);
      CHECK(d <= M_SQRT2 * w.cell_size() + 1e-9);
    }
  }
}

TEST_CASE("reverse_episode is an involution with matched geometry") {
  const GridWorld w = generate_world(31, WorldGenParams{});
  const Episode e = generate_episode(w, 200, 3);
  const Episode r = reverse_episode(w, e);
  CHECK(r.shortest_geodesic_length == doctest::Approx(e.shortest_geodesic_length).epsilon(1e-12));
  CHECK(r.start.x == e.expert_path.back().x);
  CHECK(r.goal.x == doctest::Approx(e.start.x));

  std::vector<int> reversed_ids(e.instruction.waypoint_landmark_ids.rbegin(),
                                e.instruction.waypoint_landmark_ids.rend());
  CHECK(r.instruction.waypoint_landmark_ids == reversed_ids);
  CHECK(r.instruction.embedding == instruction_embedding(w, reversed_ids));

  const Episode rr = reverse_episode(w, r);
  REQUIRE(rr.expert_path.size() == e.expert_path.size());
  for (std::size_t i = 0; i < e.expert_path.size(); ++i) {
    CHECK(rr.expert_path[i].x == doctest::Approx(e.expert_path[i].x).epsilon(1e-12));
    CHECK(rr.expert_path[i].y == doctest::Approx(e.expert_path[i].y).epsilon(1e-12));
    CHECK(std::abs(signed_angle_delta(rr.expert_path[i].heading,
                                      e.expert_path[i].heading)) < 1e-9);
  }
}

TEST_CASE("stitch_episodes joins legs through a geodesic connector") {
  const GridWorld w = generate_world(31, WorldGenParams{});
  // Find a pair with a small positive gap and one with a large gap.
  std::vector<Episode> eps;
  for (int i = 0; i < 40; ++i) eps.push_back(generate_episode(w, 300, i));

  const Episode* e1 = nullptr;
  const Episode* e2 = nullptr;
  double gap = 0.0;
  for (const Episode& a : eps) {
    for (const Episode& b : eps) {
      if (a.id == b.id) continue;
      const double g = geodesic_distance(w, a.goal, {b.start.x, b.start.y});
      if (g > 0.0 && g <= 2.0) {
        e1 = &a;
        e2 = &b;
        gap = g;
        break;
      }
    }
    if (e1) break;
  }
  REQUIRE(e1 != nullptr);

  const Episode s = stitch_episodes(w, *e1, *e2, 2.0);
  CHECK(s.shortest_geodesic_length ==
        doctest::Approx(e1->shortest_geodesic_length + gap +
                        e2->shortest_geodesic_length)
            .epsilon(1e-12));
  CHECK(path_length(s.expert_path) ==
        doctest::Approx(path_length(e1->expert_path) + gap +
                        path_length(e2->expert_path))
            .epsilon(1e-9));
  CHECK(s.goal.x == e2->goal.x);
  CHECK(s.start.x == e1->start.x);

  // Zero-gap seam: start of the second leg coincides with the first leg's end.
  Episode tail = *e2;
  tail.start = e1->expert_path.back();
  tail.expert_path[0] = e1->expert_path.back();
  tail.goal = {tail.expert_path.back().x, tail.expert_path.back().y};
  tail.shortest_geodesic_length = geodesic_distance(
      w, {tail.start.x, tail.start.y}, tail.goal);
  const Episode z = stitch_episodes(w, *e1, tail, 2.0);
  CHECK(path_length(z.expert_path) ==
        doctest::Approx(path_length(e1->expert_path) + path_length(tail.expert_path))
            .epsilon(1e-9));

  // Oversized gap and foreign worlds are rejected.
  bool found_far = false;
  for (const Episode& b : eps) {
    const double g = geodesic_distance(w, e1->goal, {b.start.x, b.start.y});
    if (g > 2.0) {
      CHECK_THROWS_AS(stitch_episodes(w, *e1, b, 2.0), std::invalid_argument);
      found_far = true;
      break;
    }
  }
  CHECK(found_far);
  Episode foreign = *e2;
  foreign.world_seed = 999;
  CHECK_THROWS_AS(stitch_episodes(w, *e1, foreign, 2.0), std::invalid_argument);
}
