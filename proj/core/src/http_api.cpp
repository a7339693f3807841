#include "netsumm/http_api.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include <httplib.h>

#include "netsumm/errors.hpp"

namespace netsumm {
namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    const auto next = path.find('/', pos);
    const auto end = next == std::string_view::npos ? path.size() : next;
    parts.emplace_back(path.substr(pos, end - pos));
    pos = end;
  }
  return parts;
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("invalid " + what + " \"" + text + "\"");
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string create_from_body(SessionStore& store, const nlohmann::json& body) {
  if (!body.is_object()) throw InputError("session request must be a JSON object");
  if (body.contains("jsonl")) return store.create_session_from_jsonl(body.at("jsonl").get<std::string>());
  if (body.contains("documents")) {
    std::string jsonl;
    for (const auto& doc : body.at("documents")) jsonl += doc.dump() + "\n";
    return store.create_session_from_jsonl(jsonl);
  }
  if (body.contains("path")) {
    const auto name = body.value("format", std::string("jsonl"));
    const auto format = parse_corpus_format(name);
    if (!format) throw InputError("unknown corpus format \"" + name + "\"");
    return store.create_session_from_path(body.at("path").get<std::string>(), *format);
  }
  throw InputError("session request needs one of \"jsonl\", \"documents\" or \"path\"");
}

ApiResponse method_not_allowed(const ApiRequest& request) {
  return {405, {{"v", 1},
                {"error", {{"type", "method_not_allowed"}, {"message", request.method + " " + request.path}}}}};
}

ApiResponse route(SessionStore& store, const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const auto& method = request.method;
  auto level_param = [&](int fallback) {
    auto it = request.query.find("level");
    return it == request.query.end() ? fallback : parse_int(it->second, "level");
  };

  if (parts.empty() || parts[0] != "sessions") {
    throw NotFoundError("no route for " + request.path);
  }
  if (parts.size() == 1) {
    if (method == "GET") return {200, {{"v", 1}, {"sessions", store.list_sessions()}}};
    if (method == "POST") {
      const auto id = create_from_body(store, parse_body(request.body));
      return {201, {{"v", 1}, {"id", id}}};
    }
    return method_not_allowed(request);
  }

  const std::string& id = parts[1];
  if (parts.size() == 2) {
    if (method == "GET") return {200, store.satisfaction_snapshot(id)};
    return method_not_allowed(request);
  }
  const std::string& resource = parts[2];

  if (parts.size() == 3 && resource == "events") {
    if (method != "POST") return method_not_allowed(request);
    return {200, store.post_interaction(id, InteractionEvent::from_json(parse_body(request.body)))};
  }
  if (parts.size() == 3 && resource == "focus") {
    if (method != "PUT" && method != "POST") return method_not_allowed(request);
    const auto body = parse_body(request.body);
    std::optional<std::string> doc;
    if (body.contains("doc") && !body.at("doc").is_null()) doc = body.at("doc").get<std::string>();
    return {200, store.set_focus(id, doc)};
  }
  if (parts.size() == 3 && resource == "feedback") {
    if (method != "GET") return method_not_allowed(request);
    auto j = store.feedback(id);
    j["session"] = id;
    return {200, j};
  }
  if (parts.size() == 3 && resource == "satisfaction") {
    if (method != "GET") return method_not_allowed(request);
    return {200, store.satisfaction_snapshot(id)};
  }
  if (parts.size() == 3 && resource == "train") {
    if (method == "POST") return {202, store.start_training(id, TrainingRequest::from_json(parse_body(request.body)))};
    if (method == "GET") return {200, store.training_status(id)};
    if (method == "DELETE") return {200, store.cancel_training(id)};
    return method_not_allowed(request);
  }
  if (parts.size() == 3 && resource == "summary") {
    if (method != "GET") return method_not_allowed(request);
    return {200, store.get_summary(id, level_param(0))};
  }
  if (parts.size() == 3 && resource == "layout") {
    if (method != "GET") return method_not_allowed(request);
    return {200, store.get_layout(id, level_param(0))};
  }
  if (parts.size() == 4 && resource == "groups") {
    if (method != "GET") return method_not_allowed(request);
    const int deepest = store.get_summary(id, 0).at("depth").get<int>();
    return {200, store.expand_supernode(id, level_param(deepest), parse_int(parts[3], "group id"))};
  }
  throw NotFoundError("no route for " + request.path);
}

// One Server-Sent Events connection: notifications are queued by the
// store's subscriber callback and drained by the HTTP worker thread.
struct EventQueue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::string> messages;
};

}  // namespace

int http_status_for(const std::exception& error) {
  if (dynamic_cast<const NotFoundError*>(&error)) return 404;
  if (dynamic_cast<const ConflictError*>(&error)) return 409;
  if (dynamic_cast<const InfeasibleError*>(&error)) return 422;
  if (dynamic_cast<const InputError*>(&error) || dynamic_cast<const DimensionError*>(&error)) return 400;
  if (dynamic_cast<const nlohmann::json::exception*>(&error)) return 400;
  return 500;
}

nlohmann::json error_body(const std::exception& error) {
  const char* type = "internal";
  switch (http_status_for(error)) {
    case 400: type = "invalid_input"; break;
    case 404: type = "not_found"; break;
    case 409: type = "conflict"; break;
    case 422: type = "infeasible"; break;
    default: break;
  }
  return {{"v", 1}, {"error", {{"type", type}, {"message", error.what()}}}};
}

ApiResponse handle_api_request(SessionStore& store, const ApiRequest& request) {
  try {
    return route(store, request);
  } catch (const std::exception& e) {
    return {http_status_for(e), error_body(e)};
  }
}

struct ApiServer::Impl {
  explicit Impl(SessionStore& s) : store(s) {}

  SessionStore& store;
  httplib::Server server;
  std::atomic<bool> stopping{false};
};

ApiServer::ApiServer(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto* impl = impl_.get();
  auto adapt = [impl](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request{req.method, req.path, {}, req.body};
    for (const auto& [key, value] : req.params) request.query[key] = value;
    const auto response = handle_api_request(impl->store, request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  const std::string any = R"(/sessions(/.*)?)";
  impl->server.Get(R"(/sessions/([^/]+)/stream)", [impl](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto queue = std::make_shared<EventQueue>();
    std::uint64_t token = 0;
    try {
      token = impl->store.subscribe(id, [queue](const nlohmann::json& message) {
        std::lock_guard lock(queue->mutex);
        queue->messages.push_back("event: " + message.at("type").get<std::string>() + "\ndata: " + message.dump() +
                                  "\n\n");
        queue->ready.notify_one();
      });
    } catch (const std::exception& e) {
      res.status = http_status_for(e);
      res.set_content(error_body(e).dump(), "application/json");
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [impl, queue](std::size_t, httplib::DataSink& sink) {
          std::unique_lock lock(queue->mutex);
          queue->ready.wait_for(lock, std::chrono::seconds(1), [&] { return !queue->messages.empty(); });
          if (impl->stopping) return false;
          if (queue->messages.empty()) {
            lock.unlock();
            static constexpr std::string_view keepalive = ": keepalive\n\n";
            return sink.write(keepalive.data(), keepalive.size());
          }
          auto batch = std::move(queue->messages);
          queue->messages.clear();
          lock.unlock();
          for (const auto& m : batch) {
            if (!sink.write(m.data(), m.size())) return false;
          }
          return true;
        },
        [impl, id, token](bool) {
          try {
            impl->store.unsubscribe(id, token);
          } catch (const std::exception&) {
          }
        });
  });
  impl->server.Get(any, adapt);
  impl->server.Post(any, adapt);
  impl->server.Put(any, adapt);
  impl->server.Delete(any, adapt);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
}

}  // namespace netsumm
