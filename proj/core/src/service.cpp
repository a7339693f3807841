#include "netsumm/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "netsumm/errors.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/summarizer.hpp"

namespace netsumm {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so readers never observe a partial file.
void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << line << '\n';
  if (!out.flush()) throw Error("cannot append to " + path.string());
}

std::string model_file(const std::string& path) { return path.empty() ? "root.json" : "b" + path + ".json"; }

std::string layout_file(int level) { return "level-" + std::to_string(level) + ".json"; }

Hierarchy level_zero(const DocumentGraph& graph, const FeedbackGraphs& fb) {
  LevelSummary lv;
  lv.level = 0;
  lv.assignment = Assignment::trivial(graph.size());
  lv.summary = build_summary(graph, lv.assignment, 0);
  lv.satisfaction = satisfaction(fb, graph.ids(), lv.assignment);
  lv.f_prob = f_prob(graph, lv.assignment);
  Hierarchy h;
  h.levels.push_back(std::move(lv));
  h.target = 1;
  return h;
}

nlohmann::json satisfaction_json(const Satisfaction& s) {
  return {{"satisfied", s.satisfied}, {"total", s.total}, {"ratio", s.ratio()}};
}

nlohmann::json point_json(const Point& p) { return nlohmann::json::array({p.x, p.y}); }

nlohmann::json episode_json(const std::string& path, const EpisodeLog& log) {
  return {{"branch", path},       {"episode", log.episode}, {"steps", log.steps},     {"terminal", log.terminal},
          {"reward", log.reward}, {"f_prob", log.f_prob},   {"epsilon", log.epsilon}, {"loss", log.loss}};
}

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

}  // namespace

const char* to_string(TrainingState state) {
  switch (state) {
    case TrainingState::kIdle: return "idle";
    case TrainingState::kQueued: return "queued";
    case TrainingState::kRunning: return "running";
    case TrainingState::kDone: return "done";
    case TrainingState::kCancelled: return "cancelled";
    case TrainingState::kFailed: return "failed";
  }
  return "unknown";
}

TrainingRequest TrainingRequest::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("training request must be a JSON object");
  TrainingRequest r;
  try {
    r.target = j.value("target", r.target);
    r.seed = j.value("seed", r.seed);
    if (j.contains("hyperparameters")) r.hyperparameters = Hyperparameters::from_json(j.at("hyperparameters"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed training request: ") + e.what());
  }
  return r;
}

struct SessionStore::Session {
  Session(std::string id_, fs::path dir_, Corpus corpus_)
      : id(std::move(id_)),
        dir(std::move(dir_)),
        corpus(std::move(corpus_)),
        vectors(tfidf(corpus)),
        graph(build_document_graph(vectors, corpus.ids())) {}

  const std::string id;
  const fs::path dir;
  const Corpus corpus;
  const std::vector<TermVector> vectors;
  const DocumentGraph graph;

  std::mutex mutex;  // guards everything below
  std::condition_variable idle;
  FeedbackGraphs fb;
  std::uint64_t fb_version = 0;
  std::optional<std::string> focus;
  bool stale = false;
  Hierarchy hierarchy;
  std::map<int, LayoutResult> layouts;

  TrainingState state = TrainingState::kIdle;
  std::optional<TrainingRequest> request;
  std::size_t episodes = 0;
  std::deque<nlohmann::json> tail;
  std::string error;
  std::atomic<bool> stop{false};
  std::thread worker;

  std::map<std::uint64_t, Subscriber> subscribers;
  std::uint64_t next_token = 1;

  // All helpers below expect `mutex` to be held.

  void check_document(const std::string& doc) const {
    if (!graph.index_of(doc)) throw NotFoundError("unknown document \"" + doc + "\"");
  }

  void check_level(int level) const {
    if (level < 0 || static_cast<std::size_t>(level) > hierarchy.depth()) {
      throw NotFoundError("unknown level " + std::to_string(level));
    }
  }

  void save_session_file() const {
    nlohmann::json j{{"v", 1}, {"id", id}, {"stale", stale}};
    j["focus"] = focus ? nlohmann::json(*focus) : nlohmann::json(nullptr);
    write_file(dir / "session.json", j.dump(2) + "\n");
  }

  nlohmann::json snapshot() const {
    auto levels = nlohmann::json::array();
    Satisfaction current;
    for (const auto& lv : hierarchy.levels) {
      current = satisfaction(fb, graph.ids(), lv.assignment);
      auto entry = satisfaction_json(current);
      entry["level"] = lv.level;
      levels.push_back(entry);
    }
    return {{"v", 1},
            {"session", id},
            {"stale", stale},
            {"feedback", {{"positive", fb.positive().size()}, {"negative", fb.negative().size()}}},
            {"level", hierarchy.depth()},
            {"satisfaction", satisfaction_json(current)},
            {"levels", levels}};
  }

  nlohmann::json status() const {
    nlohmann::json j{{"v", 1},
                     {"session", id},
                     {"state", to_string(state)},
                     {"episodes", episodes},
                     {"log_tail", nlohmann::json(std::vector<nlohmann::json>(tail.begin(), tail.end()))}};
    if (request) j["request"] = {{"target", request->target}, {"seed", request->seed}};
    if (!error.empty()) j["error"] = error;
    j["levels"] = snapshot()["levels"];
    return j;
  }

  void notify(const std::string& type, const nlohmann::json& payload) {
    const nlohmann::json message{{"v", 1}, {"type", type}, {"payload", payload}};
    for (const auto& [token, subscriber] : subscribers) subscriber(message);
  }

  const LayoutResult& layout(int level, const ForceConfig& config) {
    check_level(level);
    auto it = layouts.find(level);
    if (it != layouts.end()) return it->second;
    const auto& lv = hierarchy.levels[static_cast<std::size_t>(level)];
    auto result = two_step_layout(graph, lv.assignment, lv.summary, config);
    write_file(dir / "layouts" / layout_file(level), result.to_json().dump() + "\n");
    return layouts.emplace(level, std::move(result)).first->second;
  }

  void join_worker() {
    if (worker.joinable()) worker.join();
  }
};

SessionStore::SessionStore(fs::path root, StoreOptions options) : root_(std::move(root)), options_(std::move(options)) {
  options_.layout.validate();
  options_.hyperparameters.validate();
  fs::create_directories(root_);
}

SessionStore::~SessionStore() {
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mutex_);
    sessions = sessions_;
  }
  for (auto& [id, s] : sessions) {
    s->stop = true;
    s->join_worker();
  }
}

std::vector<std::string> SessionStore::list_sessions() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string SessionStore::create_session(const Corpus& corpus) {
  std::lock_guard lock(mutex_);
  std::string id;
  for (std::size_t i = 1;; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04zu", i);
    if (!fs::exists(root_ / buf) && !sessions_.count(buf)) {
      id = buf;
      break;
    }
  }
  const fs::path dir = root_ / id;
  auto s = std::make_shared<Session>(id, dir, corpus);
  s->hierarchy = level_zero(s->graph, s->fb);
  fs::create_directories(dir / "models");
  write_file(dir / "corpus.jsonl", to_jsonl(s->corpus));
  write_file(dir / "events.jsonl", "");
  {
    std::lock_guard session_lock(s->mutex);
    s->layout(0, options_.layout);
    // session.json is written last: its presence marks a complete session.
    s->save_session_file();
  }
  sessions_.emplace(id, s);
  return id;
}

std::string SessionStore::create_session_from_jsonl(std::string_view jsonl) {
  return create_session(parse_jsonl_corpus(jsonl, "upload"));
}

std::string SessionStore::create_session_from_path(const fs::path& path, CorpusFormat format) {
  return create_session(load_corpus(path, format));
}

std::shared_ptr<SessionStore::Session> SessionStore::open_session(const std::string& id) const {
  const fs::path dir = root_ / id;
  if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos ||
      !fs::exists(dir / "session.json")) {
    throw NotFoundError("unknown session \"" + id + "\"");
  }
  auto corpus = parse_jsonl_corpus(read_file(dir / "corpus.jsonl"), (dir / "corpus.jsonl").string());
  auto s = std::make_shared<Session>(id, dir, std::move(corpus));

  const auto meta = nlohmann::json::parse(read_file(dir / "session.json"));
  s->stale = meta.value("stale", false);
  if (meta.contains("focus") && !meta.at("focus").is_null()) s->focus = meta.at("focus").get<std::string>();

  const fs::path events = dir / "events.jsonl";
  if (fs::exists(events)) s->fb = replay_event_log(read_file(events));

  const fs::path hierarchy = dir / "hierarchy.json";
  if (fs::exists(hierarchy)) {
    s->hierarchy = Hierarchy::from_json(nlohmann::json::parse(read_file(hierarchy)), s->graph, s->fb);
    for (const auto& b : s->hierarchy.branches) {
      const fs::path model = dir / "models" / model_file(b.path);
      if (b.trained && fs::exists(model)) {
        s->hierarchy.models.emplace(b.path, QModel::from_json(nlohmann::json::parse(read_file(model))));
      }
    }
  } else {
    s->hierarchy = level_zero(s->graph, s->fb);
  }
  return s;
}

std::shared_ptr<SessionStore::Session> SessionStore::session(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;
  auto s = open_session(id);
  sessions_.emplace(id, s);
  return s;
}

nlohmann::json SessionStore::set_focus(const std::string& id, const std::optional<std::string>& doc) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  if (doc) s->check_document(*doc);
  s->focus = doc;
  s->save_session_file();
  nlohmann::json j{{"v", 1}, {"session", id}};
  j["focus"] = doc ? nlohmann::json(*doc) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json SessionStore::post_interaction(const std::string& id, const InteractionEvent& event) {
  event.validate();
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  s->check_document(event.subject);
  if (event.object) s->check_document(*event.object);
  if (event.context) s->check_document(*event.context);

  auto updated = apply_interaction(s->fb, event, s->focus);  // throws on conflict
  append_line(s->dir / "events.jsonl", LoggedEvent{event, s->focus}.to_json().dump());
  if (!(updated == s->fb)) {
    s->fb = std::move(updated);
    ++s->fb_version;
    if (!s->stale) {
      s->stale = true;
      s->save_session_file();
    }
  }
  auto snap = s->snapshot();
  s->notify("satisfaction", snap);
  return snap;
}

nlohmann::json SessionStore::satisfaction_snapshot(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  return s->snapshot();
}

nlohmann::json SessionStore::feedback(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  return s->fb.to_json();
}

nlohmann::json SessionStore::start_training(const std::string& id, const TrainingRequest& request) {
  auto s = session(id);
  std::unique_lock lock(s->mutex);
  if (s->state == TrainingState::kQueued || s->state == TrainingState::kRunning) {
    throw ConflictError("training already running for session " + id);
  }
  if (request.target < 2 || !is_power_of_two(request.target) ||
      static_cast<std::size_t>(request.target) > s->graph.size()) {
    throw InputError("target must be a power of two between 2 and the document count");
  }
  const Hyperparameters hp = request.hyperparameters.value_or(options_.hyperparameters);
  hp.validate();
  const auto feasible = feasibility_check(s->fb, 2);
  if (feasible.status == FeasibilityStatus::kInfeasible) throw InfeasibleError(feasible.reason);

  s->join_worker();
  s->state = TrainingState::kQueued;
  s->request = request;
  s->episodes = 0;
  s->tail.clear();
  s->error.clear();
  s->stop = false;
  s->notify("training_progress", s->status());
  auto response = s->status();

  const FeedbackGraphs fb = s->fb;
  const std::uint64_t version = s->fb_version;
  const std::size_t tail_size = options_.log_tail;
  const ForceConfig layout_config = options_.layout;
  s->worker = std::thread([s, request, hp, fb, version, tail_size, layout_config] {
    {
      std::lock_guard guard(s->mutex);
      s->state = TrainingState::kRunning;
      s->notify("training_progress", s->status());
    }
    try {
      SummarizeOptions so;
      so.should_stop = [&s] { return s->stop.load(); };
      so.on_episode = [&s, tail_size](const std::string& path, const EpisodeLog& log) {
        std::lock_guard guard(s->mutex);
        ++s->episodes;
        s->tail.push_back(episode_json(path, log));
        while (s->tail.size() > tail_size) s->tail.pop_front();
        if (s->episodes % 25 == 0) s->notify("training_progress", s->status());
      };
      Hierarchy h = hierarchical_summarize(s->graph, fb, request.target, hp, request.seed, so);
      if (h.cancelled || s->stop) {
        std::lock_guard guard(s->mutex);
        s->state = TrainingState::kCancelled;
        s->notify("training_progress", s->status());
        s->idle.notify_all();
        return;
      }

      // Models and layouts first, hierarchy.json last: a crash in between
      // leaves the previous hierarchy as the persisted state.
      std::map<int, LayoutResult> layouts;
      for (const auto& lv : h.levels) {
        auto result = two_step_layout(s->graph, lv.assignment, lv.summary, layout_config);
        write_file(s->dir / "layouts" / layout_file(lv.level), result.to_json().dump() + "\n");
        layouts.emplace(lv.level, std::move(result));
      }
      for (const auto& [path, model] : h.models) {
        write_file(s->dir / "models" / model_file(path), model.to_json().dump() + "\n");
      }
      const auto exported = h.to_json(s->graph);
      write_file(s->dir / "hierarchy.json", exported.dump(2) + "\n");

      std::lock_guard guard(s->mutex);
      auto models = std::move(h.models);
      s->hierarchy = Hierarchy::from_json(exported, s->graph, s->fb);
      s->hierarchy.models = std::move(models);
      s->layouts = std::move(layouts);
      s->stale = s->fb_version != version;
      s->save_session_file();
      s->state = TrainingState::kDone;
      s->notify("training_progress", s->status());
      s->notify("summary_updated", {{"v", 1}, {"session", s->id}, {"depth", s->hierarchy.depth()}});
      s->notify("satisfaction", s->snapshot());
    } catch (const std::exception& e) {
      std::lock_guard guard(s->mutex);
      s->state = TrainingState::kFailed;
      s->error = e.what();
      s->notify("training_progress", s->status());
    }
    s->idle.notify_all();
  });
  return response;
}

nlohmann::json SessionStore::training_status(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  return s->status();
}

nlohmann::json SessionStore::cancel_training(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  if (s->state != TrainingState::kQueued && s->state != TrainingState::kRunning) {
    throw NotFoundError("no active training for session " + id);
  }
  s->stop = true;
  return s->status();
}

void SessionStore::wait_for_training(const std::string& id) {
  auto s = session(id);
  {
    std::unique_lock lock(s->mutex);
    s->idle.wait(lock, [&] { return s->state != TrainingState::kQueued && s->state != TrainingState::kRunning; });
  }
  s->join_worker();
}

nlohmann::json SessionStore::get_summary(const std::string& id, int level) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  s->check_level(level);
  auto j = s->hierarchy.to_json(s->graph);
  auto lv = j.at("levels").at(static_cast<std::size_t>(level));
  const auto& stored = s->hierarchy.levels[static_cast<std::size_t>(level)];
  lv["satisfaction"] = satisfaction_json(satisfaction(s->fb, s->graph.ids(), stored.assignment));
  lv["v"] = 1;
  lv["session"] = id;
  lv["depth"] = s->hierarchy.depth();
  lv["stale"] = s->stale;
  return lv;
}

nlohmann::json SessionStore::get_layout(const std::string& id, int level) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  auto j = s->layout(level, options_.layout).to_json();
  j["session"] = id;
  j["level"] = level;
  return j;
}

nlohmann::json SessionStore::expand_supernode(const std::string& id, int level, int gid) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  s->check_level(level);
  const auto& summary = s->hierarchy.levels[static_cast<std::size_t>(level)].summary;
  std::size_t group = summary.size();
  for (std::size_t g = 0; g < summary.size(); ++g) {
    if (summary.source_labels[g] == gid) group = g;
  }
  if (group == summary.size()) {
    throw NotFoundError("unknown group " + std::to_string(gid) + " at level " + std::to_string(level));
  }
  const auto& layout = s->layout(level, options_.layout);
  std::set<std::string> member_ids;
  auto members = nlohmann::json::array();
  for (auto m : summary.supernodes[group]) {
    member_ids.insert(s->graph.ids()[m]);
    members.push_back({{"id", s->graph.ids()[m]}, {"position", point_json(layout.positions[m])}});
  }
  auto terms = nlohmann::json::array();
  for (const auto& [term, weight] : top_terms(s->corpus, s->vectors, member_ids, options_.top_terms)) {
    terms.push_back({{"term", term}, {"weight", weight}});
  }
  return {{"v", 1},
          {"session", id},
          {"level", level},
          {"gid", gid},
          {"position", point_json(layout.supernode_positions[group])},
          {"members", members},
          {"top_terms", terms}};
}

std::uint64_t SessionStore::subscribe(const std::string& id, Subscriber subscriber) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  const auto token = s->next_token++;
  subscriber({{"v", 1}, {"type", "satisfaction"}, {"payload", s->snapshot()}});
  s->subscribers.emplace(token, std::move(subscriber));
  return token;
}

void SessionStore::unsubscribe(const std::string& id, std::uint64_t token) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  s->subscribers.erase(token);
}

}  // namespace netsumm
