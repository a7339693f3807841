#include <doctest.h>

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"
#include "netsumm/summarizer.hpp"
#include "oracles.hpp"

using namespace netsumm;

namespace {

Hyperparameters quick_hp() {
  Hyperparameters hp;
  hp.episodes = 120;
  return hp;
}

// Four tight pairs {0,1}, {2,3}, ... with weak links between pairs.
DocumentGraph four_pairs() {
  const std::size_t n = 8;
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (i / 2 == j / 2) {
        w[i * n + j] = 0.9;
      } else if (i / 4 == j / 4) {
        w[i * n + j] = 0.3;
      } else {
        w[i * n + j] = 0.05;
      }
    }
  }
  return DocumentGraph(n, std::move(w));
}

void check_refinement(const Hierarchy& h) {
  for (std::size_t d = 0; d + 1 < h.levels.size(); ++d) {
    const auto& coarse = h.levels[d].assignment.labels;
    const auto& fine = h.levels[d + 1].assignment.labels;
    std::map<int, int> parent;
    for (std::size_t u = 0; u < coarse.size(); ++u) {
      auto [it, inserted] = parent.emplace(fine[u], coarse[u]);
      CHECK(it->second == coarse[u]);
    }
    CHECK(h.levels[d + 1].summary.size() >= h.levels[d].summary.size());
  }
}

std::string binary_path(int group, int bits) {
  std::string p;
  for (int b = bits - 1; b >= 0; --b) p += ((group >> b) & 1) ? '1' : '0';
  return p;
}

}  // namespace

TEST_CASE("target validation") {
  const auto g = four_pairs();
  CHECK_THROWS_AS(hierarchical_summarize(g, {}, 3, quick_hp(), 1), InputError);
  CHECK_THROWS_AS(hierarchical_summarize(g, {}, 1, quick_hp(), 1), InputError);
  CHECK_THROWS_AS(hierarchical_summarize(g, {}, 16, quick_hp(), 1), InputError);
  FeedbackGraphs bad;
  bad.add(Sign::kPositive, DocPair::make("0", "1"));
  bad.add(Sign::kPositive, DocPair::make("1", "2"));
  bad.add(Sign::kNegative, DocPair::make("0", "2"));
  CHECK_THROWS_AS(hierarchical_summarize(g, bad, 2, quick_hp(), 1), InfeasibleError);
  FeedbackGraphs unknown;
  unknown.add(Sign::kPositive, DocPair::make("0", "x"));
  CHECK_THROWS_AS(hierarchical_summarize(g, unknown, 2, quick_hp(), 1), NotFoundError);
}

TEST_CASE("two groups: levels 0 and 1, level 1 is a direct bisection") {
  const auto g = four_pairs();
  FeedbackGraphs fb;
  fb.add(Sign::kPositive, DocPair::make("0", "3"));
  const auto h = hierarchical_summarize(g, fb, 2, quick_hp(), 5);
  REQUIRE(h.levels.size() == 2);
  CHECK(h.depth() == 1);
  CHECK(h.levels[0].assignment == Assignment::trivial(8));
  CHECK(h.levels[0].f_prob == 1.0);
  const auto direct = train(g, index_feedback(fb, g.ids()), 2, quick_hp(), branch_seed(5, ""));
  CHECK(h.levels[1].assignment == direct.best);
  CHECK(h.levels[1].assignment.k == 2);
  CHECK(h.levels[1].f_prob == doctest::Approx(direct.best_f_prob));
  REQUIRE(h.branches.size() == 1);
  CHECK(h.branches[0].path.empty());
  CHECK(h.branches[0].trained);
  CHECK(h.models.count("") == 1);
}

TEST_CASE("deeper levels refine their parents") {
  const auto g = four_pairs();
  const auto h = hierarchical_summarize(g, {}, 4, quick_hp(), 2);
  REQUIRE(h.levels.size() == 3);
  check_refinement(h);
  CHECK(h.levels[2].assignment.k == 4);
  for (const auto& b : h.branches) CHECK(b.level >= 1);

  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const auto random = oracle::random_graph(12, rng, 3);
    check_refinement(hierarchical_summarize(random, {}, 8, quick_hp(), 10 + trial));
  }
}

TEST_CASE("singleton groups pass through untrained") {
  // Node 0 is isolated, so the first split tends to cut it off on its own.
  std::vector<double> w(16, 0.0);
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t j = 1; j < 4; ++j) w[i * 4 + j] = i == j ? 0.0 : 1.0;
  }
  const DocumentGraph g(4, w);
  const auto h = hierarchical_summarize(g, {}, 4, quick_hp(), 1);
  check_refinement(h);
  for (const auto& b : h.branches) {
    if (b.members < 2) CHECK_FALSE(b.trained);
    if (b.members >= 2) CHECK(b.trained);
  }
}

TEST_CASE("feedback separated above the last level is counted once as dropped") {
  const auto g = four_pairs();
  FeedbackGraphs fb;
  fb.add(Sign::kNegative, DocPair::make("0", "7"));
  fb.add(Sign::kPositive, DocPair::make("0", "1"));
  const auto h = hierarchical_summarize(g, fb, 4, quick_hp(), 4);
  REQUIRE(h.levels.size() == 3);
  const auto& l1 = h.levels[1].assignment.labels;
  REQUIRE(l1[0] != l1[7]);  // the negative pair is satisfied at level 1

  std::size_t dropped_total = 0;
  std::map<std::string, std::size_t> dropped_by_path;
  for (const auto& b : h.branches) {
    dropped_total += b.dropped;
    dropped_by_path[b.path] += b.dropped;
  }
  CHECK(dropped_total == 1);
  CHECK(dropped_by_path[""] == 1);
}

TEST_CASE("dropped counts match the first level that separates each pair") {
  Rng rng(6);
  const auto g = oracle::random_graph(12, rng, 4);
  FeedbackGraphs fb;
  fb.add(Sign::kPositive, DocPair::make("0", "4"));
  fb.add(Sign::kPositive, DocPair::make("1", "5"));
  fb.add(Sign::kNegative, DocPair::make("0", "1"));
  fb.add(Sign::kNegative, DocPair::make("2", "3"));
  fb.add(Sign::kNegative, DocPair::make("6", "7"));
  const auto h = hierarchical_summarize(g, fb, 8, quick_hp(), 8);
  REQUIRE(h.levels.size() == 4);

  std::map<std::string, std::size_t> expected;
  for (const auto* set : {&fb.positive(), &fb.negative()}) {
    for (const auto& p : *set) {
      const auto a = std::stoul(p.first), b = std::stoul(p.second);
      for (std::size_t d = 1; d + 1 < h.levels.size(); ++d) {
        const auto& labels = h.levels[d].assignment.labels;
        if (labels[a] != labels[b]) {
          expected[binary_path(h.levels[d - 1].assignment.labels[a], static_cast<int>(d) - 1)] += 1;
          break;
        }
      }
    }
  }
  std::map<std::string, std::size_t> got;
  for (const auto& b : h.branches) {
    if (b.dropped > 0) got[b.path] += b.dropped;
  }
  CHECK(got == expected);

  // Per level: satisfied + violated = total, with totals always the full feedback.
  for (const auto& lv : h.levels) CHECK(lv.satisfaction.total == fb.size());
}

TEST_CASE("best level selection") {
  Hierarchy h;
  for (int d = 0; d < 3; ++d) h.levels.push_back(LevelSummary{d, Assignment::trivial(2), {}, {1, 1}, 0.0});
  CHECK(select_best_level(h) == 2);
  h.levels[2].satisfaction = {4, 5};
  CHECK(select_best_level(h) == 1);
  h.levels[0].satisfaction = {0, 0};
  h.levels[1].satisfaction = {0, 0};
  h.levels[2].satisfaction = {0, 0};
  CHECK(select_best_level(h) == 2);
  CHECK_THROWS_AS(select_best_level(Hierarchy{}), InputError);

  const auto g = four_pairs();
  const auto real = hierarchical_summarize(g, {}, 4, quick_hp(), 1);
  CHECK(select_best_level(real, {}, g.ids()) == 2);
}

TEST_CASE("hierarchy is reproducible and round-trips through json") {
  const auto g = four_pairs();
  FeedbackGraphs fb;
  fb.add(Sign::kPositive, DocPair::make("2", "3"));
  const auto a = hierarchical_summarize(g, fb, 4, quick_hp(), 9);
  const auto b = hierarchical_summarize(g, fb, 4, quick_hp(), 9);
  CHECK(a.to_json(g) == b.to_json(g));

  const auto j = a.to_json(g);
  CHECK(j.contains("dropped_feedback"));
  const auto back = Hierarchy::from_json(j, g, fb);
  REQUIRE(back.levels.size() == a.levels.size());
  for (std::size_t d = 0; d < a.levels.size(); ++d) {
    CHECK(back.levels[d].assignment == a.levels[d].assignment);
    CHECK(back.levels[d].satisfaction == a.levels[d].satisfaction);
    CHECK(back.levels[d].summary.superedges == a.levels[d].summary.superedges);
  }
  CHECK(back.to_json(g) == j);

  const DocumentGraph other(2, {0, 1, 1, 0}, {"x", "y"});
  CHECK_THROWS_AS(Hierarchy::from_json(j, other, {}), InputError);
  CHECK_THROWS_AS(Hierarchy::from_json(nlohmann::json::object(), g, fb), InputError);
}

TEST_CASE("cancellation marks the hierarchy") {
  const auto g = four_pairs();
  SummarizeOptions opts;
  opts.should_stop = [] { return true; };
  const auto h = hierarchical_summarize(g, {}, 4, quick_hp(), 1, opts);
  CHECK(h.cancelled);
}
