#pragma once

#include <memory>
#include <string>

#include "kct/engine.hpp"

namespace kct {

struct ApiOptions {
  std::string host = "127.0.0.1";
  int port = 8080;            // 0 picks a free port
  std::string bearer_token;   // empty disables authentication
};

/// HTTP interface over an engine and its store.
///
///   GET  /healthz
///   GET  /missions                  stored missions and the active one
///   GET  /missions/active           active mission document
///   POST /missions                  upload a kct-mission/1 document, make it active
///   GET  /scoreboards               persisted versions
///   GET  /scoreboards/latest
///   GET  /scoreboards/{version}
///   POST /whatif                    ephemeral re-evaluation with patches
///   POST /events                    discovery events (array, object or JSON lines)
///   POST /cycles                    run a cycle on the active mission
///   GET  /inventory                 asset inventory of the latest version
///
/// Successful responses carry "scoreboard_version" and "config_hash".
/// Errors are {"code": ..., "message": ...} with a matching HTTP status.
class ApiServer {
 public:
  /// `defaults` supplies cycle inputs other than the mission (vulnerability
  /// source, fixtures, captures); request bodies may override them.
  ApiServer(Engine& engine, ApiOptions options, CycleInputs defaults = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds the listening socket and returns the port.
  int bind();
  /// Serves until stop(); bind() must have succeeded.
  void serve();
  /// bind() and serve() on a background thread.
  int start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kct
