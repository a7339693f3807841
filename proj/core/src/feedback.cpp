#include "netsumm/feedback.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"

namespace netsumm {
namespace {

std::string describe(const DocPair& p) { return "(" + p.first + ", " + p.second + ")"; }

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

DocPair DocPair::make(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

void FeedbackGraphs::add(Sign sign, const DocPair& pair) {
  if (pair.first == pair.second) throw InputError("feedback pair needs two distinct documents");
  auto& same = sign == Sign::kPositive ? positive_ : negative_;
  const auto& other = sign == Sign::kPositive ? negative_ : positive_;
  if (other.contains(pair)) {
    throw ConflictError("conflicting feedback: pair " + describe(pair) + " already has " +
                        (sign == Sign::kPositive ? "negative" : "positive") + " feedback");
  }
  same.insert(pair);
}

bool FeedbackGraphs::contains(Sign sign, const DocPair& pair) const {
  return (sign == Sign::kPositive ? positive_ : negative_).contains(pair);
}

nlohmann::json FeedbackGraphs::to_json() const {
  auto pairs = [](const std::set<DocPair>& s) {
    auto arr = nlohmann::json::array();
    for (const auto& p : s) arr.push_back({p.first, p.second});
    return arr;
  };
  return {{"v", 1}, {"positive", pairs(positive_)}, {"negative", pairs(negative_)}};
}

FeedbackGraphs FeedbackGraphs::from_json(const nlohmann::json& j) {
  FeedbackGraphs fb;
  auto read = [&](const char* key, Sign sign) {
    if (!j.contains(key)) return;
    for (const auto& p : j.at(key)) {
      if (!p.is_array() || p.size() != 2) throw InputError(std::string("feedback: bad pair in \"") + key + "\"");
      fb.add(sign, DocPair::make(p[0].get<std::string>(), p[1].get<std::string>()));
    }
  };
  read("positive", Sign::kPositive);
  read("negative", Sign::kNegative);
  return fb;
}

const char* to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::kAnnotate: return "annotate";
    case InteractionKind::kHighlight: return "highlight";
    case InteractionKind::kOverlap: return "overlap";
    case InteractionKind::kMinimize: return "minimize";
    case InteractionKind::kClose: return "close";
  }
  return "unknown";
}

std::optional<InteractionKind> parse_interaction_kind(std::string_view name) {
  for (auto k : {InteractionKind::kAnnotate, InteractionKind::kHighlight, InteractionKind::kOverlap,
                 InteractionKind::kMinimize, InteractionKind::kClose}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

void InteractionEvent::validate() const {
  if (subject.empty()) throw InputError("interaction event needs a subject");
  switch (kind) {
    case InteractionKind::kOverlap:
      if (!object || object->empty()) throw InputError("overlap event needs an object document");
      if (*object == subject) throw InputError("overlap event needs two distinct documents");
      break;
    case InteractionKind::kMinimize:
    case InteractionKind::kClose:
      if (!context || context->empty()) {
        throw InputError(std::string(to_string(kind)) + " event needs a context document");
      }
      if (*context == subject) throw InputError(std::string(to_string(kind)) + " event context equals its subject");
      break;
    case InteractionKind::kAnnotate:
    case InteractionKind::kHighlight:
      break;
  }
}

nlohmann::json InteractionEvent::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind)}, {"subject", subject}, {"timestamp", timestamp}};
  if (object) j["object"] = *object;
  if (context) j["context"] = *context;
  return j;
}

InteractionEvent InteractionEvent::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("interaction event must be a JSON object");
  InteractionEvent e;
  try {
    auto kind = parse_interaction_kind(j.at("kind").get<std::string>());
    if (!kind) throw InputError("unknown interaction kind \"" + j.at("kind").get<std::string>() + "\"");
    e.kind = *kind;
    e.subject = j.at("subject").get<std::string>();
    if (j.contains("object") && !j["object"].is_null()) e.object = j["object"].get<std::string>();
    if (j.contains("context") && !j["context"].is_null()) e.context = j["context"].get<std::string>();
    if (j.contains("timestamp")) e.timestamp = j["timestamp"].get<std::int64_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed interaction event: ") + ex.what());
  }
  e.validate();
  return e;
}

std::optional<SignedPair> derive_pair(const InteractionEvent& event, const std::optional<std::string>& focus) {
  event.validate();
  switch (event.kind) {
    case InteractionKind::kOverlap:
      return SignedPair{Sign::kPositive, DocPair::make(event.subject, *event.object)};
    case InteractionKind::kAnnotate:
    case InteractionKind::kHighlight:
      if (!focus || *focus == event.subject) return std::nullopt;
      return SignedPair{Sign::kPositive, DocPair::make(event.subject, *focus)};
    case InteractionKind::kMinimize:
    case InteractionKind::kClose:
      return SignedPair{Sign::kNegative, DocPair::make(event.subject, *event.context)};
  }
  return std::nullopt;
}

FeedbackGraphs apply_interaction(const FeedbackGraphs& fb, const InteractionEvent& event,
                                 const std::optional<std::string>& focus) {
  FeedbackGraphs out = fb;
  if (auto sp = derive_pair(event, focus)) out.add(sp->sign, sp->pair);
  return out;
}

std::size_t PairConstraints::count_satisfied(const std::vector<int>& labels) const {
  std::size_t s = 0;
  for (const auto& [a, b] : positive) s += labels[a] == labels[b] ? 1 : 0;
  for (const auto& [a, b] : negative) s += labels[a] != labels[b] ? 1 : 0;
  return s;
}

bool PairConstraints::all_satisfied(const std::vector<int>& labels) const {
  for (const auto& [a, b] : positive) {
    if (labels[a] != labels[b]) return false;
  }
  for (const auto& [a, b] : negative) {
    if (labels[a] == labels[b]) return false;
  }
  return true;
}

PairConstraints index_feedback(const FeedbackGraphs& fb, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  auto lookup = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) throw NotFoundError("unknown document id \"" + id + "\"");
    return it->second;
  };
  PairConstraints c;
  for (const auto& p : fb.positive()) c.positive.emplace_back(lookup(p.first), lookup(p.second));
  for (const auto& p : fb.negative()) c.negative.emplace_back(lookup(p.first), lookup(p.second));
  return c;
}

Satisfaction satisfaction(const FeedbackGraphs& fb, const std::vector<std::string>& ids,
                          const Assignment& assignment) {
  if (assignment.size() != ids.size()) throw DimensionError("assignment length does not match id space");
  const auto c = index_feedback(fb, ids);
  return {c.count_satisfied(assignment.labels), c.size()};
}

bool is_fully_satisfied(const FeedbackGraphs& fb, const std::vector<std::string>& ids,
                        const Assignment& assignment) {
  return satisfaction(fb, ids, assignment).full();
}

Projection project_feedback(const FeedbackGraphs& fb, const std::set<std::string>& members) {
  Projection out;
  auto keep = [&](const DocPair& p) { return members.contains(p.first) && members.contains(p.second); };
  for (const auto& p : fb.positive()) {
    if (keep(p)) {
      out.feedback.add(Sign::kPositive, p);
    } else {
      ++out.dropped;
    }
  }
  for (const auto& p : fb.negative()) {
    if (keep(p)) {
      out.feedback.add(Sign::kNegative, p);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

Feasibility feasibility_check(const PairConstraints& constraints, std::size_t n, int k,
                              const std::vector<std::string>& names) {
  if (k < 1) throw InputError("feasibility check needs k >= 1");
  auto name = [&](std::size_t i) { return i < names.size() ? names[i] : std::to_string(i); };
  DisjointSets comps(n);
  for (const auto& [a, b] : constraints.positive) comps.unite(a, b);

  auto component_text = [&](std::size_t root) {
    std::string s = "{";
    for (std::size_t i = 0; i < n; ++i) {
      if (comps.find(i) != root) continue;
      if (s.size() > 1) s += ", ";
      s += name(i);
    }
    return s + "}";
  };

  for (const auto& [a, b] : constraints.negative) {
    if (comps.find(a) == comps.find(b)) {
      return {FeasibilityStatus::kInfeasible, "negative pair (" + name(a) + ", " + name(b) +
                                                  ") lies inside positive component " +
                                                  component_text(comps.find(a))};
    }
  }
  if (k == 1) {
    if (!constraints.negative.empty()) {
      return {FeasibilityStatus::kInfeasible, "negative feedback cannot be split with a single group"};
    }
    return {FeasibilityStatus::kFeasible, ""};
  }
  if (k > 2) return {FeasibilityStatus::kUnknown, ""};

  // Two groups: the contracted negative graph must be 2-colorable.
  std::map<std::size_t, std::vector<std::size_t>> adj;
  for (const auto& [a, b] : constraints.negative) {
    adj[comps.find(a)].push_back(comps.find(b));
    adj[comps.find(b)].push_back(comps.find(a));
  }
  std::map<std::size_t, int> color;
  for (const auto& [start, _] : adj) {
    if (color.contains(start)) continue;
    color[start] = 0;
    std::queue<std::size_t> q;
    q.push(start);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : adj[u]) {
        auto it = color.find(v);
        if (it == color.end()) {
          color[v] = 1 - color[u];
          q.push(v);
        } else if (it->second == color[u]) {
          return {FeasibilityStatus::kInfeasible,
                  "negative feedback forms an odd cycle between positive components " + component_text(u) +
                      " and " + component_text(v) + "; two groups cannot separate them"};
        }
      }
    }
  }
  return {FeasibilityStatus::kFeasible, ""};
}

Feasibility feasibility_check(const FeedbackGraphs& fb, int k) {
  std::set<std::string> ids;
  for (const auto* s : {&fb.positive(), &fb.negative()}) {
    for (const auto& p : *s) {
      ids.insert(p.first);
      ids.insert(p.second);
    }
  }
  std::vector<std::string> names(ids.begin(), ids.end());
  return feasibility_check(index_feedback(fb, names), names.size(), k, names);
}

nlohmann::json LoggedEvent::to_json() const {
  auto j = event.to_json();
  if (focus) j["focus"] = *focus;
  return j;
}

LoggedEvent LoggedEvent::from_json(const nlohmann::json& j) {
  LoggedEvent e{InteractionEvent::from_json(j), std::nullopt};
  if (j.contains("focus") && !j["focus"].is_null()) e.focus = j["focus"].get<std::string>();
  return e;
}

FeedbackGraphs replay_event_log(std::string_view jsonl) {
  FeedbackGraphs fb;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw InputError("event log line " + std::to_string(line_no) + ": not valid JSON");
    }
    auto logged = LoggedEvent::from_json(j);
    fb = apply_interaction(fb, logged.event, logged.focus);
  }
  return fb;
}

}  // namespace netsumm
