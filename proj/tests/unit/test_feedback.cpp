#include <doctest.h>

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"
#include "netsumm/feedback.hpp"
#include "oracles.hpp"

using namespace netsumm;

namespace {

InteractionEvent overlap(std::string a, std::string b) {
  return {InteractionKind::kOverlap, std::move(a), std::move(b), std::nullopt, 0};
}

InteractionEvent minimize(std::string d, std::string context) {
  return {InteractionKind::kMinimize, std::move(d), std::nullopt, std::move(context), 0};
}

InteractionEvent annotate(std::string d) { return {InteractionKind::kAnnotate, std::move(d), std::nullopt, std::nullopt, 0}; }

FeedbackGraphs make_fb(const std::vector<std::pair<std::string, std::string>>& pos,
                       const std::vector<std::pair<std::string, std::string>>& neg) {
  FeedbackGraphs fb;
  for (const auto& [a, b] : pos) fb.add(Sign::kPositive, DocPair::make(a, b));
  for (const auto& [a, b] : neg) fb.add(Sign::kNegative, DocPair::make(a, b));
  return fb;
}

std::string node(std::size_t i) { return "n" + std::to_string(i); }

}  // namespace

TEST_CASE("pairs are unordered") {
  CHECK(DocPair::make("b", "a") == DocPair::make("a", "b"));
  CHECK(DocPair::make("b", "a").first == "a");
  FeedbackGraphs fb;
  CHECK_THROWS_AS(fb.add(Sign::kPositive, DocPair::make("a", "a")), InputError);
}

TEST_CASE("overlap adds a positive pair") {
  const auto fb = apply_interaction({}, overlap("d1", "d2"));
  CHECK(fb.positive() == std::set<DocPair>{DocPair::make("d1", "d2")});
  CHECK(fb.negative().empty());
}

TEST_CASE("minimize while reading adds a negative pair") {
  const auto fb = apply_interaction({}, minimize("d3", "d1"));
  CHECK(fb.negative() == std::set<DocPair>{DocPair::make("d1", "d3")});
  InteractionEvent close{InteractionKind::kClose, "d4", std::nullopt, "d1", 0};
  CHECK(apply_interaction(fb, close).negative().size() == 2);
}

TEST_CASE("opposite sign on an existing pair is a conflict") {
  const auto fb = apply_interaction({}, minimize("d2", "d1"));
  CHECK_THROWS_AS(apply_interaction(fb, overlap("d1", "d2")), ConflictError);
  CHECK_THROWS_AS(apply_interaction(apply_interaction({}, overlap("a", "b")), minimize("b", "a")), ConflictError);
}

TEST_CASE("re-adding a pair of the same sign is idempotent") {
  const auto once = apply_interaction({}, overlap("a", "b"));
  const auto twice = apply_interaction(once, overlap("b", "a"));
  CHECK(once == twice);
}

TEST_CASE("annotate and highlight pair with the focus document") {
  CHECK(apply_interaction({}, annotate("d2"), std::string("d1")).positive() ==
        std::set<DocPair>{DocPair::make("d1", "d2")});
  InteractionEvent hl{InteractionKind::kHighlight, "d5", std::nullopt, std::nullopt, 0};
  CHECK(apply_interaction({}, hl, std::string("d1")).contains(Sign::kPositive, DocPair::make("d1", "d5")));
  CHECK(apply_interaction({}, annotate("d2")).empty());
  CHECK(apply_interaction({}, annotate("d2"), std::string("d2")).empty());
}

TEST_CASE("malformed events are rejected") {
  CHECK_THROWS_AS(apply_interaction({}, overlap("a", "a")), InputError);
  CHECK_THROWS_AS(apply_interaction({}, {InteractionKind::kOverlap, "a", std::nullopt, std::nullopt, 0}), InputError);
  CHECK_THROWS_AS(apply_interaction({}, minimize("a", "a")), InputError);
  CHECK_THROWS_AS(apply_interaction({}, {InteractionKind::kClose, "a", std::nullopt, std::nullopt, 0}), InputError);
  CHECK_THROWS_AS(InteractionEvent::from_json(nlohmann::json{{"kind", "wave"}, {"subject", "a"}}), InputError);
  CHECK_THROWS_AS(InteractionEvent::from_json(nlohmann::json{{"kind", "overlap"}}), InputError);
  CHECK_THROWS_AS(InteractionEvent::from_json(nlohmann::json::array()), InputError);
}

TEST_CASE("event json round-trip") {
  const InteractionEvent e{InteractionKind::kClose, "d4", std::nullopt, "d1", 1234};
  const auto back = InteractionEvent::from_json(e.to_json());
  CHECK(back.kind == e.kind);
  CHECK(back.subject == e.subject);
  CHECK(back.context == e.context);
  CHECK(back.timestamp == 1234);
  for (const char* name : {"annotate", "highlight", "overlap", "minimize", "close"}) {
    REQUIRE(parse_interaction_kind(name));
    CHECK(std::string(to_string(*parse_interaction_kind(name))) == name);
  }
}

TEST_CASE("satisfaction counts") {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  CHECK(satisfaction({}, ids, Assignment{{0, 1, 0, 1}, 2}) == Satisfaction{0, 0});
  CHECK(is_fully_satisfied({}, ids, Assignment{{0, 1, 0, 1}, 2}));
  CHECK(satisfaction(make_fb({{"a", "b"}}, {}), ids, Assignment{{1, 1, 0, 0}, 2}) == Satisfaction{1, 1});
  const auto fb = make_fb({{"a", "b"}, {"b", "c"}}, {{"a", "d"}});
  // labels a=b=1, c=2, d=1 with k = 3
  const auto s = satisfaction(fb, ids, Assignment{{1, 1, 2, 1}, 3});
  CHECK(s == Satisfaction{1, 3});
  CHECK_FALSE(s.full());
  CHECK(s.ratio() == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(is_fully_satisfied(make_fb({{"a", "b"}}, {}), ids, Assignment{{0, 1, 0, 0}, 2}));
  CHECK_THROWS_AS(satisfaction(make_fb({{"a", "zz"}}, {}), ids, Assignment{{0, 0, 0, 0}, 1}), NotFoundError);
}

TEST_CASE("satisfaction agrees with the matrix form on random instances") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 8;
    const int k = 2 + static_cast<int>(rng.uniform_index(3));
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(node(i));
    FeedbackGraphs fb;
    oracle::PairList pos, neg;
    for (int e = 0; e < 6; ++e) {
      const auto a = rng.uniform_index(n), b = rng.uniform_index(n);
      if (a == b) continue;
      const auto sign = rng.uniform01() < 0.5 ? Sign::kPositive : Sign::kNegative;
      const auto p = DocPair::make(node(a), node(b));
      if (fb.contains(sign == Sign::kPositive ? Sign::kNegative : Sign::kPositive, p)) continue;
      if (fb.contains(sign, p)) continue;
      fb.add(sign, p);
      (sign == Sign::kPositive ? pos : neg).emplace_back(a, b);
    }
    const auto a = oracle::random_assignment(n, k, rng);
    CHECK(is_fully_satisfied(fb, ids, a) == oracle::matrix_constraint_holds(n, pos, neg, a.labels, k));
  }
}

TEST_CASE("per-pair predicate and matrix form agree on every assignment of small instances") {
  const oracle::PairList pos{{0, 1}, {2, 3}};
  const oracle::PairList neg{{1, 2}, {0, 4}};
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 5; ++i) ids.push_back(node(i));
  FeedbackGraphs fb;
  for (auto [a, b] : pos) fb.add(Sign::kPositive, DocPair::make(node(a), node(b)));
  for (auto [a, b] : neg) fb.add(Sign::kNegative, DocPair::make(node(a), node(b)));
  std::size_t agreeing = 0, total = 0;
  for (const auto& labels : oracle::all_labelings(5, 3)) {
    ++total;
    if (is_fully_satisfied(fb, ids, Assignment{labels, 3}) == oracle::matrix_constraint_holds(5, pos, neg, labels, 3)) {
      ++agreeing;
    }
  }
  CHECK(total == 243);
  CHECK(agreeing == total);
}

TEST_CASE("satisfaction is invariant under relabeling") {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const auto fb = make_fb({{"a", "b"}}, {{"b", "c"}, {"c", "d"}});
  const Assignment x{{0, 0, 1, 2}, 3};
  const Assignment y{{2, 2, 0, 1}, 3};
  CHECK(satisfaction(fb, ids, x) == satisfaction(fb, ids, y));
}

TEST_CASE("projection keeps inner pairs and counts the rest") {
  const auto fb = make_fb({{"a", "b"}}, {{"b", "c"}});
  const auto all = project_feedback(fb, {"a", "b", "c"});
  CHECK(all.feedback == fb);
  CHECK(all.dropped == 0);
  const auto single = project_feedback(make_fb({{"a", "b"}}, {}), {"a", "x"});
  CHECK(single.feedback.empty());
  CHECK(single.dropped == 1);

  Rng rng(5);
  FeedbackGraphs ten;
  while (ten.size() < 10) {
    const auto a = rng.uniform_index(8), b = rng.uniform_index(8);
    if (a == b) continue;
    const auto p = DocPair::make(node(a), node(b));
    if (ten.contains(Sign::kPositive, p) || ten.contains(Sign::kNegative, p)) continue;
    ten.add(ten.size() % 2 == 0 ? Sign::kPositive : Sign::kNegative, p);
  }
  const std::set<std::string> members{node(0), node(2), node(3), node(5), node(7)};
  const auto proj = project_feedback(ten, members);
  std::set<DocPair> pos, neg;
  std::size_t dropped = 0;
  for (const auto& p : ten.positive()) {
    if (members.count(p.first) && members.count(p.second)) pos.insert(p); else ++dropped;
  }
  for (const auto& p : ten.negative()) {
    if (members.count(p.first) && members.count(p.second)) neg.insert(p); else ++dropped;
  }
  CHECK(proj.feedback.positive() == pos);
  CHECK(proj.feedback.negative() == neg);
  CHECK(proj.dropped == dropped);
}

TEST_CASE("feasibility: negative pair inside a positive component") {
  const auto fb = make_fb({{"a", "b"}, {"b", "c"}}, {{"a", "c"}});
  const auto r = feasibility_check(fb, 4);
  CHECK(r.status == FeasibilityStatus::kInfeasible);
  CHECK(r.reason.find("{a, b, c}") != std::string::npos);
}

TEST_CASE("feasibility: two groups need a bipartite contracted negative graph") {
  const auto odd = make_fb({{"a", "a2"}, {"b", "b2"}, {"c", "c2"}}, {{"a", "b"}, {"b2", "c"}, {"c2", "a2"}});
  CHECK(feasibility_check(odd, 2).status == FeasibilityStatus::kInfeasible);
  CHECK(feasibility_check(odd, 3).status == FeasibilityStatus::kUnknown);
  const auto path = make_fb({}, {{"a", "b"}, {"b", "c"}, {"c", "d"}});
  CHECK(feasibility_check(path, 2).status == FeasibilityStatus::kFeasible);
  CHECK(feasibility_check(path, 1).status == FeasibilityStatus::kInfeasible);
  CHECK(feasibility_check(make_fb({{"a", "b"}}, {}), 1).status == FeasibilityStatus::kFeasible);
  CHECK(feasibility_check(FeedbackGraphs{}, 2).status == FeasibilityStatus::kFeasible);
  CHECK_THROWS_AS(feasibility_check(FeedbackGraphs{}, 0), InputError);
}

TEST_CASE("feasibility verdict agrees with exhaustive search for two groups") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6;
    PairConstraints c;
    std::set<std::pair<std::size_t, std::size_t>> used;
    for (int e = 0; e < 5; ++e) {
      auto a = rng.uniform_index(n), b = rng.uniform_index(n);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!used.insert({a, b}).second) continue;
      (rng.uniform01() < 0.5 ? c.positive : c.negative).emplace_back(a, b);
    }
    bool exists = false;
    for (const auto& labels : oracle::all_labelings(n, 2)) exists = exists || c.all_satisfied(labels);
    const auto verdict = feasibility_check(c, n, 2);
    CHECK(verdict.status == (exists ? FeasibilityStatus::kFeasible : FeasibilityStatus::kInfeasible));
  }
}

TEST_CASE("feedback json and event log replay") {
  const auto fb = make_fb({{"a", "b"}}, {{"c", "a"}});
  CHECK(FeedbackGraphs::from_json(fb.to_json()) == fb);
  CHECK_THROWS_AS(FeedbackGraphs::from_json(nlohmann::json::parse(R"({"positive": [["a", "b"]], "negative": [["b", "a"]]})")),
                  ConflictError);

  std::string log;
  log += LoggedEvent{overlap("d1", "d2"), std::nullopt}.to_json().dump() + "\n";
  log += LoggedEvent{annotate("d3"), std::string("d1")}.to_json().dump() + "\n";
  log += "\n";
  log += LoggedEvent{minimize("d4", "d1"), std::string("d1")}.to_json().dump() + "\n";
  const auto replayed = replay_event_log(log);
  CHECK(replayed == make_fb({{"d1", "d2"}, {"d1", "d3"}}, {{"d1", "d4"}}));
  CHECK(replay_event_log(log) == replayed);
  CHECK_THROWS_WITH_AS(replay_event_log(log + "{bad\n"), doctest::Contains("line 5"), InputError);
}

TEST_CASE("index_feedback resolves ids and rejects unknown ones") {
  const auto fb = make_fb({{"b", "c"}}, {{"a", "c"}});
  const auto c = index_feedback(fb, {"a", "b", "c"});
  REQUIRE(c.positive.size() == 1);
  CHECK(c.positive[0] == std::pair<std::size_t, std::size_t>{1, 2});
  CHECK(c.negative[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(c.count_satisfied({0, 1, 1}) == 2);
  CHECK_THROWS_AS(index_feedback(fb, {"a", "b"}), NotFoundError);
}
