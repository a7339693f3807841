#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsumm/netgraph.hpp"

namespace netsumm {

/// Unordered document pair, stored with first < second.
struct DocPair {
  std::string first;
  std::string second;

  static DocPair make(std::string a, std::string b);
  auto operator<=>(const DocPair&) const = default;
};

enum class Sign { kPositive, kNegative };

/// Must-group (positive) and must-separate (negative) document pairs.
class FeedbackGraphs {
 public:
  const std::set<DocPair>& positive() const { return positive_; }
  const std::set<DocPair>& negative() const { return negative_; }
  std::size_t size() const { return positive_.size() + negative_.size(); }
  bool empty() const { return size() == 0; }

  /// Throws ConflictError if the pair is present with the opposite sign and
  /// InputError for a self-pair. Re-adding an existing pair is a no-op.
  void add(Sign sign, const DocPair& pair);
  bool contains(Sign sign, const DocPair& pair) const;

  nlohmann::json to_json() const;
  static FeedbackGraphs from_json(const nlohmann::json& j);

  friend bool operator==(const FeedbackGraphs&, const FeedbackGraphs&) = default;

 private:
  std::set<DocPair> positive_;
  std::set<DocPair> negative_;
};

enum class InteractionKind { kAnnotate, kHighlight, kOverlap, kMinimize, kClose };

const char* to_string(InteractionKind kind);
std::optional<InteractionKind> parse_interaction_kind(std::string_view name);

struct InteractionEvent {
  InteractionKind kind = InteractionKind::kOverlap;
  std::string subject;
  std::optional<std::string> object;   // overlap partner
  std::optional<std::string> context;  // open document for minimize/close
  std::int64_t timestamp = 0;

  /// Throws InputError when the kind's required fields are missing or equal.
  void validate() const;

  nlohmann::json to_json() const;
  static InteractionEvent from_json(const nlohmann::json& j);
};

struct SignedPair {
  Sign sign;
  DocPair pair;
};

/// The pair an interaction contributes, if any. Annotate/highlight pair
/// with the active focus document; without one they contribute nothing.
std::optional<SignedPair> derive_pair(const InteractionEvent& event, const std::optional<std::string>& focus);

FeedbackGraphs apply_interaction(const FeedbackGraphs& fb, const InteractionEvent& event,
                                 const std::optional<std::string>& focus = std::nullopt);

/// Feedback pairs resolved to node indices of a particular id space.
struct PairConstraints {
  std::vector<std::pair<std::size_t, std::size_t>> positive;
  std::vector<std::pair<std::size_t, std::size_t>> negative;

  std::size_t size() const { return positive.size() + negative.size(); }
  bool empty() const { return size() == 0; }
  std::size_t count_satisfied(const std::vector<int>& labels) const;
  bool all_satisfied(const std::vector<int>& labels) const;
};

PairConstraints index_feedback(const FeedbackGraphs& fb, const std::vector<std::string>& ids);

struct Satisfaction {
  std::size_t satisfied = 0;
  std::size_t total = 0;

  /// Vacuously 1 when there is no feedback.
  double ratio() const { return total == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(total); }
  bool full() const { return satisfied == total; }
  friend bool operator==(const Satisfaction&, const Satisfaction&) = default;
};

/// Positive pairs co-grouped plus negative pairs split.
Satisfaction satisfaction(const FeedbackGraphs& fb, const std::vector<std::string>& ids,
                          const Assignment& assignment);
bool is_fully_satisfied(const FeedbackGraphs& fb, const std::vector<std::string>& ids,
                        const Assignment& assignment);

struct Projection {
  FeedbackGraphs feedback;
  std::size_t dropped = 0;
};

/// Keeps pairs with both endpoints in `members`.
Projection project_feedback(const FeedbackGraphs& fb, const std::set<std::string>& members);

enum class FeasibilityStatus { kFeasible, kInfeasible, kUnknown };

struct Feasibility {
  FeasibilityStatus status = FeasibilityStatus::kFeasible;
  std::string reason;
};

Feasibility feasibility_check(const FeedbackGraphs& fb, int k);
/// Index-space variant; `names` (optional) label nodes in the reason text.
Feasibility feasibility_check(const PairConstraints& constraints, std::size_t n, int k,
                              const std::vector<std::string>& names = {});

/// One logged event with the focus that was active when it arrived.
struct LoggedEvent {
  InteractionEvent event;
  std::optional<std::string> focus;

  nlohmann::json to_json() const;
  static LoggedEvent from_json(const nlohmann::json& j);
};

/// Rebuilds feedback from a jsonl event log. Throws on the first bad line.
FeedbackGraphs replay_event_log(std::string_view jsonl);

}  // namespace netsumm
