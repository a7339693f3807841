#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "netsumm/corpus.hpp"
#include "netsumm/feedback.hpp"
#include "netsumm/layout.hpp"
#include "netsumm/qlearn.hpp"

namespace netsumm {

// Session-oriented façade over the library. Every session lives in its own
// directory under the store root:
//
//   <root>/<id>/session.json      focus document and stale flag
//   <root>/<id>/corpus.jsonl      corpus snapshot
//   <root>/<id>/events.jsonl      interaction log, one LoggedEvent per line
//   <root>/<id>/hierarchy.json    latest completed hierarchy (if any)
//   <root>/<id>/models/*.json     Q-model checkpoints by branch path
//   <root>/<id>/layouts/*.json    two-step layout per level
//
// All JSON responses carry a top-level "v": 1.

struct StoreOptions {
  ForceConfig layout;
  Hyperparameters hyperparameters;  // used when a training request omits them
  std::size_t top_terms = 10;       // word-cloud size for expand_supernode
  std::size_t log_tail = 20;        // episodes kept in training status
};

enum class TrainingState { kIdle, kQueued, kRunning, kDone, kCancelled, kFailed };
const char* to_string(TrainingState state);

struct TrainingRequest {
  int target = 2;
  std::uint64_t seed = 1;
  std::optional<Hyperparameters> hyperparameters;

  static TrainingRequest from_json(const nlohmann::json& j);
};

/// Receives {"v":1,"type":...,"payload":...} messages. Types are
/// "training_progress", "summary_updated" and "satisfaction". Called from
/// the thread that caused the change; must not call back into the store.
using Subscriber = std::function<void(const nlohmann::json& message)>;

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root, StoreOptions options = {});
  ~SessionStore();  // cancels and joins running trainings

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  const std::filesystem::path& root() const { return root_; }
  const StoreOptions& options() const { return options_; }

  /// Persists the corpus, builds its graph and level-0 layout, returns the id.
  std::string create_session(const Corpus& corpus);
  std::string create_session_from_jsonl(std::string_view jsonl);
  std::string create_session_from_path(const std::filesystem::path& path, CorpusFormat format);

  /// Ids of sessions on disk, sorted.
  std::vector<std::string> list_sessions() const;

  /// Sets or clears the open document used to pair annotate/highlight.
  nlohmann::json set_focus(const std::string& id, const std::optional<std::string>& doc);

  /// Appends the event, updates feedback and returns the satisfaction
  /// snapshot. Throws NotFoundError for unknown documents and ConflictError
  /// for opposite-sign pairs (the log is left untouched in both cases).
  nlohmann::json post_interaction(const std::string& id, const InteractionEvent& event);

  nlohmann::json satisfaction_snapshot(const std::string& id);
  nlohmann::json feedback(const std::string& id);

  /// Starts a background hierarchical training run. Throws ConflictError
  /// when a run is active and InfeasibleError when the feedback cannot be
  /// satisfied by a bisection.
  nlohmann::json start_training(const std::string& id, const TrainingRequest& request);
  nlohmann::json training_status(const std::string& id);
  nlohmann::json cancel_training(const std::string& id);
  /// Blocks until the current run (if any) has finished.
  void wait_for_training(const std::string& id);

  nlohmann::json get_summary(const std::string& id, int level);
  nlohmann::json get_layout(const std::string& id, int level);
  nlohmann::json expand_supernode(const std::string& id, int level, int gid);

  /// Registers a subscriber and immediately sends it the current
  /// satisfaction snapshot, so reconnecting clients resynchronize.
  std::uint64_t subscribe(const std::string& id, Subscriber subscriber);
  void unsubscribe(const std::string& id, std::uint64_t token);

 private:
  struct Session;

  std::shared_ptr<Session> session(const std::string& id);
  std::shared_ptr<Session> open_session(const std::string& id) const;

  std::filesystem::path root_;
  StoreOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace netsumm
