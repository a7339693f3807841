#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsumm/feedback.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/qlearn.hpp"

namespace netsumm {

struct LevelSummary {
  int level = 0;
  Assignment assignment;  // k = 2^level, labels are branch paths read as binary
  SummaryGraph summary;
  Satisfaction satisfaction;
  double f_prob = 0.0;
};

/// One bisection of one group.
struct BranchRecord {
  std::string path;  // "" for the root, then "0", "1", "01", ...
  int level = 1;     // level this branch's split produces
  std::size_t members = 0;
  std::size_t feedback_pairs = 0;
  std::size_t dropped = 0;  // pairs cut by this split, lost to deeper levels
  bool trained = false;     // false for singletons passed through
  bool terminal = false;    // split satisfies the branch's feedback
};

struct Hierarchy {
  std::vector<LevelSummary> levels;
  std::vector<BranchRecord> branches;    // level, then path order
  std::map<std::string, QModel> models;  // by branch path
  std::uint64_t seed = 0;
  int target = 2;
  bool cancelled = false;

  std::size_t depth() const { return levels.empty() ? 0 : levels.size() - 1; }

  nlohmann::json to_json(const DocumentGraph& graph) const;
  /// Rebuilds levels against `graph`; models are not part of the export.
  static Hierarchy from_json(const nlohmann::json& j, const DocumentGraph& graph, const FeedbackGraphs& fb);
};

struct SummarizeOptions {
  std::function<void(const std::string& path, const EpisodeLog&)> on_episode;
  std::function<bool()> should_stop;
};

/// Seed used to train the branch at `path`.
std::uint64_t branch_seed(std::uint64_t root_seed, const std::string& path);

/// Recursive bisection down to `target` groups (a power of two).
Hierarchy hierarchical_summarize(const DocumentGraph& graph, const FeedbackGraphs& fb, int target,
                                 const Hyperparameters& hp, std::uint64_t seed, const SummarizeOptions& options = {});

/// Deepest level with the highest stored satisfaction ratio.
std::size_t select_best_level(const Hierarchy& hierarchy);

/// Same, re-evaluating each level against `fb`.
std::size_t select_best_level(const Hierarchy& hierarchy, const FeedbackGraphs& fb,
                              const std::vector<std::string>& ids);

}  // namespace netsumm
