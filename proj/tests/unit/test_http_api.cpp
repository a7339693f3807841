#include <doctest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "netsumm/errors.hpp"
#include "netsumm/eval.hpp"
#include "netsumm/http_api.hpp"
#include "tempdir.hpp"

using namespace netsumm;

namespace {

StoreOptions quick_options() {
  StoreOptions o;
  o.hyperparameters.episodes = 60;
  o.layout.iterations = 40;
  return o;
}

std::string small_jsonl() {
  SyntheticParams p;
  p.n_relevant = 3;
  p.n_irrelevant = 5;
  p.doc_length = 25;
  Rng rng(2);
  return to_jsonl(generate_synthetic_corpus(p, rng).corpus);
}

ApiResponse call(SessionStore& store, std::string method, std::string path, const nlohmann::json& body = nullptr,
                 std::map<std::string, std::string> query = {}) {
  return handle_api_request(store, {std::move(method), std::move(path), std::move(query),
                                    body.is_null() ? std::string() : body.dump()});
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("error mapping") {
  CHECK(http_status_for(NotFoundError("x")) == 404);
  CHECK(http_status_for(ConflictError("x")) == 409);
  CHECK(http_status_for(InfeasibleError("x")) == 422);
  CHECK(http_status_for(InputError("x")) == 400);
  CHECK(http_status_for(DimensionError("x")) == 400);
  CHECK(http_status_for(std::runtime_error("x")) == 500);
  const auto body = error_body(ConflictError("pair clash"));
  CHECK(body["v"] == 1);
  CHECK(body["error"]["type"] == "conflict");
  CHECK(body["error"]["message"] == "pair clash");
}

TEST_CASE("session routes") {
  TempDir dir("http-routes");
  SessionStore store(dir.path(), quick_options());

  auto created = call(store, "POST", "/sessions", {{"jsonl", small_jsonl()}});
  CHECK(created.status == 201);
  const std::string id = created.body["id"];
  CHECK(call(store, "GET", "/sessions").body["sessions"] == nlohmann::json::array({id}));

  const auto docs = call(store, "POST", "/sessions",
                         {{"documents", {{{"id", "a"}, {"text", "alpha beta"}}, {{"id", "b"}, {"text", "beta gamma"}}}}});
  CHECK(docs.status == 201);
  CHECK(call(store, "POST", "/sessions", {{"jsonl", "{bad"}}).status == 400);
  CHECK(call(store, "POST", "/sessions", nlohmann::json::object()).status == 400);
  CHECK(call(store, "DELETE", "/sessions").status == 405);
  CHECK(call(store, "GET", "/nothing").status == 404);
  CHECK(call(store, "GET", "/sessions/s0404").status == 404);

  const auto snapshot = call(store, "GET", "/sessions/" + id);
  CHECK(snapshot.status == 200);
  CHECK(snapshot.body["satisfaction"]["ratio"] == 1.0);

  const auto summary = call(store, "GET", "/sessions/" + id + "/summary");
  CHECK(summary.status == 200);
  const auto members = summary.body["supernodes"][0]["members"];
  const std::string d0 = members[0], d1 = members[1], d2 = members[2];

  const auto posted = call(store, "POST", "/sessions/" + id + "/events",
                           {{"kind", "overlap"}, {"subject", d0}, {"object", d1}});
  CHECK(posted.status == 200);
  CHECK(posted.body["feedback"]["positive"] == 1);
  CHECK(call(store, "POST", "/sessions/" + id + "/events", {{"kind", "close"}, {"subject", d1}, {"context", d0}})
            .status == 409);
  CHECK(call(store, "POST", "/sessions/" + id + "/events", {{"kind", "overlap"}, {"subject", d0}, {"object", "zz"}})
            .status == 404);
  CHECK(call(store, "POST", "/sessions/" + id + "/events", {{"kind", "wave"}, {"subject", d0}}).status == 400);
  CHECK(call(store, "GET", "/sessions/" + id + "/events").status == 405);

  CHECK(call(store, "PUT", "/sessions/" + id + "/focus", {{"doc", d2}}).body["focus"] == d2);
  CHECK(call(store, "POST", "/sessions/" + id + "/events", {{"kind", "annotate"}, {"subject", d0}})
            .body["feedback"]["positive"] == 2);
  const auto fb = call(store, "GET", "/sessions/" + id + "/feedback");
  CHECK(fb.body["positive"].size() == 2);
  CHECK(fb.body["session"] == id);
  CHECK(call(store, "GET", "/sessions/" + id + "/satisfaction").body["stale"] == true);

  CHECK(call(store, "GET", "/sessions/" + id + "/layout", nullptr, {{"level", "0"}}).body["positions"].size() == 8);
  CHECK(call(store, "GET", "/sessions/" + id + "/summary", nullptr, {{"level", "3"}}).status == 404);
  CHECK(call(store, "GET", "/sessions/" + id + "/summary", nullptr, {{"level", "x"}}).status == 400);

  CHECK(call(store, "POST", "/sessions/" + id + "/train", {{"target", 3}}).status == 400);
  CHECK(call(store, "DELETE", "/sessions/" + id + "/train").status == 404);
  const auto started = call(store, "POST", "/sessions/" + id + "/train", {{"target", 2}, {"seed", 4}});
  CHECK(started.status == 202);
  store.wait_for_training(id);
  CHECK(call(store, "GET", "/sessions/" + id + "/train").body["state"] == "done");
  const auto deepest = call(store, "GET", "/sessions/" + id + "/summary", nullptr, {{"level", "1"}});
  REQUIRE(deepest.status == 200);
  const int gid = deepest.body["supernodes"][0]["label"];
  const auto group = call(store, "GET", "/sessions/" + id + "/groups/" + std::to_string(gid));
  CHECK(group.status == 200);
  CHECK(group.body["level"] == 1);
  CHECK(group.body["members"].size() == deepest.body["supernodes"][0]["members"].size());
  CHECK(call(store, "GET", "/sessions/" + id + "/groups/77").status == 404);
}

TEST_CASE("live server answers requests and streams notifications") {
  TempDir dir("http-live");
  SessionStore store(dir.path(), quick_options());
  ApiServer server(store);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(10, 0);
  const auto created = client.Post("/sessions", nlohmann::json{{"jsonl", small_jsonl()}}.dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = nlohmann::json::parse(created->body)["id"];
  const auto summary = client.Get("/sessions/" + id + "/summary?level=0");
  REQUIRE(summary);
  const auto members = nlohmann::json::parse(summary->body)["supernodes"][0]["members"];

  std::mutex m;
  std::string received;
  std::atomic<bool> done{false};
  std::thread listener([&] {
    httplib::Client sse("127.0.0.1", port);
    sse.set_read_timeout(10, 0);
    sse.Get("/sessions/" + id + "/stream", [&](const char* data, std::size_t len) {
      std::lock_guard lock(m);
      received.append(data, len);
      return count_of(received, "event: satisfaction") < 2;
    });
    done = true;
  });

  auto wait_for = [&](std::size_t events) {
    for (int i = 0; i < 500; ++i) {
      {
        std::lock_guard lock(m);
        if (count_of(received, "event: satisfaction") >= events) return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return false;
  };
  CHECK(wait_for(1));
  const auto posted = client.Post("/sessions/" + id + "/events",
                                  nlohmann::json{{"kind", "overlap"}, {"subject", members[0]}, {"object", members[1]}}.dump(),
                                  "application/json");
  REQUIRE(posted);
  CHECK(posted->status == 200);
  CHECK(wait_for(2));
  listener.join();
  CHECK(done);
  {
    std::lock_guard lock(m);
    CHECK(received.find("data: {") != std::string::npos);
  }

  const auto missing = client.Get("/sessions/s0999/stream");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  serving.join();
}
