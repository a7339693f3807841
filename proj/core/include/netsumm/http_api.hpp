#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "netsumm/service.hpp"

namespace netsumm {

// Transport-independent view of the HTTP JSON API:
//
//   GET    /sessions                          list session ids
//   POST   /sessions                          {"jsonl": text} | {"documents": [...]} | {"path", "format"}
//   POST   /sessions/{id}/events              InteractionEvent -> satisfaction snapshot
//   PUT    /sessions/{id}/focus               {"doc": id | null}
//   GET    /sessions/{id}/feedback            feedback graphs
//   GET    /sessions/{id}/satisfaction        satisfaction snapshot
//   POST   /sessions/{id}/train               {"target", "seed", "hyperparameters"?}
//   GET    /sessions/{id}/train               training status
//   DELETE /sessions/{id}/train               cancel
//   GET    /sessions/{id}/summary?level=d
//   GET    /sessions/{id}/layout?level=d
//   GET    /sessions/{id}/groups/{gid}?level=d (level defaults to the deepest)
//
// The server additionally streams notifications as Server-Sent Events on
// GET /sessions/{id}/stream. Errors are {"v":1,"error":{"type","message"}}.

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse handle_api_request(SessionStore& store, const ApiRequest& request);

/// HTTP status for an exception thrown by the library.
int http_status_for(const std::exception& error);
nlohmann::json error_body(const std::exception& error);

class ApiServer {
 public:
  explicit ApiServer(SessionStore& store);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a successful bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace netsumm
