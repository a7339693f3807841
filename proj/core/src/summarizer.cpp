#include "netsumm/summarizer.hpp"

#include <bit>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"

namespace netsumm {
namespace {

std::string path_of(std::size_t group, int bits) {
  std::string p(static_cast<std::size_t>(bits), '0');
  for (int b = 0; b < bits; ++b) {
    if ((group >> b) & 1U) p[static_cast<std::size_t>(bits - 1 - b)] = '1';
  }
  return p;
}

LevelSummary make_level(const DocumentGraph& graph, const FeedbackGraphs& fb, int level, Assignment assignment) {
  LevelSummary out;
  out.level = level;
  out.summary = build_summary(graph, assignment, level);
  out.satisfaction = satisfaction(fb, graph.ids(), assignment);
  out.f_prob = f_prob(graph, assignment);
  out.assignment = std::move(assignment);
  return out;
}

// a/b > c/d without rounding; empty feedback counts as ratio 1.
bool ratio_greater(const Satisfaction& x, const Satisfaction& y) {
  const std::size_t xs = x.total == 0 ? 1 : x.satisfied, xt = x.total == 0 ? 1 : x.total;
  const std::size_t ys = y.total == 0 ? 1 : y.satisfied, yt = y.total == 0 ? 1 : y.total;
  return xs * yt > ys * xt;
}

}  // namespace

std::uint64_t branch_seed(std::uint64_t root_seed, const std::string& path) {
  return derive_seed(root_seed, "branch:" + path);
}

Hierarchy hierarchical_summarize(const DocumentGraph& graph, const FeedbackGraphs& fb, int target,
                                 const Hyperparameters& hp, std::uint64_t seed, const SummarizeOptions& options) {
  const std::size_t n = graph.size();
  if (target < 2 || !std::has_single_bit(static_cast<unsigned>(target))) {
    throw InputError("target super-node count must be a power of two >= 2, got " + std::to_string(target));
  }
  if (static_cast<std::size_t>(target) > n) {
    throw InputError("target super-node count " + std::to_string(target) + " exceeds document count " +
                     std::to_string(n));
  }
  index_feedback(fb, graph.ids());  // rejects unknown ids up front
  if (auto f = feasibility_check(index_feedback(fb, graph.ids()), n, 2, graph.ids());
      f.status == FeasibilityStatus::kInfeasible) {
    throw InfeasibleError("infeasible feedback: " + f.reason);
  }
  const int depth = std::countr_zero(static_cast<unsigned>(target));

  Hierarchy h;
  h.seed = seed;
  h.target = target;
  h.levels.push_back(make_level(graph, fb, 0, Assignment::trivial(n)));

  std::vector<int> labels(n, 0);
  std::vector<FeedbackGraphs> group_fb{fb};
  for (int d = 1; d <= depth; ++d) {
    const std::size_t parents = std::size_t{1} << (d - 1);
    std::vector<int> next(n, 0);
    std::vector<FeedbackGraphs> child_fb(parents * 2);
    for (std::size_t g = 0; g < parents; ++g) {
      std::vector<std::size_t> members;
      for (std::size_t u = 0; u < n; ++u) {
        if (labels[u] == static_cast<int>(g)) members.push_back(u);
      }
      if (members.empty()) continue;

      BranchRecord rec;
      rec.path = path_of(g, d - 1);
      rec.level = d;
      rec.members = members.size();
      rec.feedback_pairs = group_fb[g].size();
      std::vector<int> split(members.size(), 0);
      if (members.size() >= 2) {
        const auto sub = induced_subgraph(graph, members);
        const auto constraints = index_feedback(group_fb[g], sub.graph.ids());
        TrainOptions topts;
        if (options.on_episode) {
          topts.on_episode = [&](const EpisodeLog& e) { options.on_episode(rec.path, e); };
        }
        topts.should_stop = options.should_stop;
        auto res = train(sub.graph, constraints, 2, hp, branch_seed(seed, rec.path), topts);
        if (res.cancelled) {
          h.cancelled = true;
          return h;
        }
        split = res.best.labels;
        rec.trained = true;
        rec.terminal = res.best_terminal;
        h.models.emplace(rec.path, std::move(res.model));
      } else {
        rec.terminal = group_fb[g].empty();
      }
      std::set<std::string> side[2];
      for (std::size_t i = 0; i < members.size(); ++i) {
        next[members[i]] = static_cast<int>(2 * g) + split[i];
        side[split[i]].insert(graph.ids()[members[i]]);
      }
      if (d < depth) {
        std::size_t kept = 0;
        for (int c = 0; c < 2; ++c) {
          auto proj = project_feedback(group_fb[g], side[c]);
          kept += proj.feedback.size();
          child_fb[2 * g + static_cast<std::size_t>(c)] = std::move(proj.feedback);
        }
        rec.dropped = group_fb[g].size() - kept;
      }
      h.branches.push_back(rec);
    }
    labels = next;
    group_fb = std::move(child_fb);
    h.levels.push_back(make_level(graph, fb, d, Assignment{labels, 1 << d}));
  }
  return h;
}

std::size_t select_best_level(const Hierarchy& hierarchy) {
  if (hierarchy.levels.empty()) throw InputError("empty hierarchy");
  std::size_t best = 0;
  for (std::size_t d = 1; d < hierarchy.levels.size(); ++d) {
    if (!ratio_greater(hierarchy.levels[best].satisfaction, hierarchy.levels[d].satisfaction)) best = d;
  }
  return best;
}

std::size_t select_best_level(const Hierarchy& hierarchy, const FeedbackGraphs& fb,
                              const std::vector<std::string>& ids) {
  Hierarchy copy = hierarchy;
  for (auto& level : copy.levels) level.satisfaction = satisfaction(fb, ids, level.assignment);
  return select_best_level(copy);
}

nlohmann::json Hierarchy::to_json(const DocumentGraph& graph) const {
  auto levels_json = nlohmann::json::array();
  for (const auto& lv : levels) {
    auto supernodes = nlohmann::json::array();
    for (const auto& members : lv.summary.supernodes) {
      auto ids = nlohmann::json::array();
      for (auto m : members) ids.push_back(graph.ids()[m]);
      supernodes.push_back({{"label", lv.summary.source_labels[supernodes.size()]}, {"members", ids}});
    }
    auto edges = nlohmann::json::array();
    for (std::size_t p = 0; p < lv.summary.size(); ++p) {
      auto row = nlohmann::json::array();
      for (std::size_t q = 0; q < lv.summary.size(); ++q) row.push_back(lv.summary.superedge(p, q));
      edges.push_back(row);
    }
    levels_json.push_back({{"level", lv.level},
                           {"k", lv.assignment.k},
                           {"labels", lv.assignment.labels},
                           {"supernodes", supernodes},
                           {"superedges", edges},
                           {"satisfaction",
                            {{"satisfied", lv.satisfaction.satisfied},
                             {"total", lv.satisfaction.total},
                             {"ratio", lv.satisfaction.ratio()}}},
                           {"f_prob", lv.f_prob}});
  }
  auto dropped = nlohmann::json::array();
  auto branch_json = nlohmann::json::array();
  for (const auto& b : branches) {
    if (b.dropped > 0) dropped.push_back({{"path", b.path}, {"level", b.level}, {"dropped", b.dropped}});
    branch_json.push_back({{"path", b.path},
                           {"level", b.level},
                           {"members", b.members},
                           {"feedback_pairs", b.feedback_pairs},
                           {"dropped", b.dropped},
                           {"trained", b.trained},
                           {"terminal", b.terminal}});
  }
  return {{"v", 1},
          {"seed", seed},
          {"target", target},
          {"ids", graph.ids()},
          {"levels", levels_json},
          {"branches", branch_json},
          {"dropped_feedback", dropped}};
}

Hierarchy Hierarchy::from_json(const nlohmann::json& j, const DocumentGraph& graph, const FeedbackGraphs& fb) {
  Hierarchy h;
  try {
    if (j.at("ids").get<std::vector<std::string>>() != graph.ids()) {
      throw InputError("hierarchy was built for a different document set");
    }
    h.seed = j.at("seed").get<std::uint64_t>();
    h.target = j.at("target").get<int>();
    for (const auto& lv : j.at("levels")) {
      Assignment a{lv.at("labels").get<std::vector<int>>(), lv.at("k").get<int>()};
      if (a.size() != graph.size()) throw InputError("hierarchy labels do not match document count");
      a.validate();
      h.levels.push_back(make_level(graph, fb, lv.at("level").get<int>(), std::move(a)));
    }
    for (const auto& b : j.at("branches")) {
      h.branches.push_back({b.at("path").get<std::string>(), b.at("level").get<int>(),
                            b.at("members").get<std::size_t>(), b.at("feedback_pairs").get<std::size_t>(),
                            b.at("dropped").get<std::size_t>(), b.at("trained").get<bool>(),
                            b.at("terminal").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed hierarchy JSON: ") + e.what());
  }
  if (h.levels.empty()) throw InputError("hierarchy has no levels");
  return h;
}

}  // namespace netsumm
