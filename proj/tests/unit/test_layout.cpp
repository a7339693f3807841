#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"
#include "netsumm/layout.hpp"
#include "oracles.hpp"

using namespace netsumm;

namespace {

void check_basic(const std::vector<Point>& pts) {
  for (const auto& p : pts) {
    CHECK(std::isfinite(p.x));
    CHECK(std::isfinite(p.y));
    CHECK(std::abs(p.x) <= 1.0);
    CHECK(std::abs(p.y) <= 1.0);
  }
}

double min_pairwise(const std::vector<Point>& pts) {
  double best = INFINITY;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, distance(pts[i], pts[j]));
  }
  return best;
}

}  // namespace

TEST_CASE("distance") {
  CHECK(distance({0, 0}, {3, 4}) == 5.0);
  CHECK(distance({1, 1}, {1, 1}) == 0.0);
}

TEST_CASE("single node sits at the origin") {
  const DocumentGraph g(1, {0.0});
  CHECK(force_layout(g, ForceConfig{}) == std::vector<Point>{{0.0, 0.0}});
}

TEST_CASE("two nodes are symmetric about the origin") {
  for (double w : {0.0, 0.2, 1.0}) {
    const DocumentGraph g(2, {0, w, w, 0});
    const auto p = force_layout(g, ForceConfig{});
    CHECK(std::abs(p[0].x + p[1].x) < 1e-12);
    CHECK(std::abs(p[0].y + p[1].y) < 1e-12);
    CHECK(distance(p[0], p[1]) > 0.0);
  }
}

TEST_CASE("a heavy edge pulls its endpoints closer than light ones") {
  const DocumentGraph g(3, {0, 1.0, 0.1, 1.0, 0, 0.1, 0.1, 0.1, 0});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ForceConfig cfg;
    cfg.seed = seed;
    const auto p = force_layout(g, cfg);
    const double heavy = distance(p[0], p[1]);
    CHECK(heavy < distance(p[0], p[2]));
    CHECK(heavy < distance(p[1], p[2]));
  }
}

TEST_CASE("force layout is deterministic, bounded and non-overlapping") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = oracle::random_graph(10, rng, 2, 0.3);
    ForceConfig cfg;
    cfg.seed = 7 + static_cast<std::uint64_t>(trial);
    const auto a = force_layout(g, cfg);
    CHECK(a == force_layout(g, cfg));
    check_basic(a);
    CHECK(min_pairwise(a) > 0.0);
  }
  CHECK_THROWS_AS(force_layout(DocumentGraph{}, ForceConfig{}), InputError);
}

TEST_CASE("config validation and json") {
  ForceConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.repulsion = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.seed = 99;
  cfg.iterations = 50;
  const auto back = ForceConfig::from_json(cfg.to_json());
  CHECK(back.seed == 99);
  CHECK(back.iterations == 50);
  CHECK(ForceConfig::from_json(nlohmann::json{{"iterations", 5}}).repulsion == ForceConfig{}.repulsion);
}

TEST_CASE("one group: the plain layout of the whole graph") {
  Rng rng(5);
  const auto g = oracle::random_graph(6, rng);
  const auto a = Assignment::trivial(6);
  const auto s = build_summary(g, a);
  ForceConfig cfg;
  const auto r = two_step_layout(g, a, s, cfg);
  REQUIRE(r.supernode_positions.size() == 1);
  CHECK(r.supernode_positions[0] == Point{0.0, 0.0});
  ForceConfig sub = cfg;
  sub.seed = derive_seed(cfg.seed, "group:0");
  CHECK(r.positions == force_layout(g, sub));
}

TEST_CASE("combine rule: sublayout shrunk by the group count around its super-node") {
  Rng rng(6);
  const auto g = oracle::random_graph(12, rng, 4);
  const Assignment a{{0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3}, 4};
  const auto s = build_summary(g, a);
  ForceConfig cfg;
  cfg.seed = 3;
  const auto r = two_step_layout(g, a, s, cfg);
  REQUIRE_FALSE(r.jittered);
  const double k = 4.0;
  for (std::size_t grp = 0; grp < s.size(); ++grp) {
    const auto sub = induced_subgraph(g, s.supernodes[grp]);
    ForceConfig sub_cfg = cfg;
    sub_cfg.seed = derive_seed(cfg.seed, "group:" + std::to_string(s.source_labels[grp]));
    const auto local = force_layout(sub.graph, sub_cfg);
    const auto centre = r.supernode_positions[grp];
    for (std::size_t i = 0; i < local.size(); ++i) {
      const auto& p = r.positions[sub.to_parent[i]];
      CHECK(p.x == local[i].x / k + centre.x);
      CHECK(p.y == local[i].y / k + centre.y);
      CHECK(distance(p, centre) <= std::sqrt(2.0) / k + 1e-12);
    }
  }
  // The arithmetic of the rule on a hand example.
  const Point sub_point{0.4, -0.2}, centre{0.5, 0.5};
  CHECK(sub_point.x / k + centre.x == doctest::Approx(0.6));
  CHECK(sub_point.y / k + centre.y == doctest::Approx(0.45));
}

TEST_CASE("singleton groups sit on their super-node") {
  Rng rng(7);
  const auto g = oracle::random_graph(4, rng);
  const Assignment a{{0, 1, 1, 1}, 2};
  const auto r = two_step_layout(g, a, build_summary(g, a), ForceConfig{});
  CHECK(r.positions[0] == r.supernode_positions[0]);
}

TEST_CASE("well separated groups stay apart") {
  // Two dense blocks with almost no weight between them.
  const std::size_t n = 8;
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) w[i * n + j] = (i < 4) == (j < 4) ? 0.8 : 0.02;
    }
  }
  const DocumentGraph g(n, w);
  const Assignment a{{0, 0, 0, 0, 1, 1, 1, 1}, 2};
  const auto s = build_summary(g, a);
  const auto r = two_step_layout(g, a, s, ForceConfig{});
  CHECK(distance(r.supernode_positions[0], r.supernode_positions[1]) > 2.0 / 2.0);
  double within = 0.0, across = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(r.positions[i], r.positions[j]);
      if (a.labels[i] == a.labels[j]) {
        within = std::max(within, d);
      } else {
        across = std::min(across, d);
      }
    }
  }
  CHECK(within < across);
}

TEST_CASE("two-step layout is deterministic and exports every document") {
  Rng rng(8);
  const auto g = oracle::random_graph(9, rng, 3);
  const auto a = oracle::random_assignment(9, 3, rng);
  const auto s = build_summary(g, a);
  const auto r1 = two_step_layout(g, a, s, ForceConfig{});
  const auto r2 = two_step_layout(g, a, s, ForceConfig{});
  CHECK(r1.positions == r2.positions);
  CHECK(r1.supernode_positions == r2.supernode_positions);
  CHECK(min_pairwise(r1.positions) > 0.0);
  const auto j = r1.to_json();
  CHECK(j["positions"].size() == 9);
  CHECK(j["supernodes"].size() == s.size());
  CHECK(j.contains("config"));
  CHECK_THROWS_AS(two_step_layout(g, Assignment{{0, 1}, 2}, s, ForceConfig{}), DimensionError);
}
