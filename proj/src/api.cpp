#include "kct/api.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "kct/error.hpp"
#include "kct/report.hpp"
#include "kct/whatif.hpp"

namespace kct {

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void reply_error(httplib::Response& res, int status, std::string code, std::string message) {
  reply(res, status, {{"code", std::move(code)}, {"message", std::move(message)}});
}

// Maps the in-flight exception to an error document.
void reply_current_exception(httplib::Response& res) {
  try {
    throw;
  } catch (const NotFoundError& e) {
    reply_error(res, 404, "not_found", e.what());
  } catch (const ParseError& e) {
    reply_error(res, 400, "parse_error", e.what());
  } catch (const nlohmann::json::exception& e) {
    reply_error(res, 400, "parse_error", e.what());
  } catch (const ValidationError& e) {
    reply_error(res, 422, "validation_error", e.what());
  } catch (const NetworkError& e) {
    reply_error(res, 502, "upstream_error", e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "internal_error", e.what());
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
}

std::vector<DiscoveryEvent> events_from_body(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return parse_event_stream(body);  // JSON lines
  }
  std::vector<DiscoveryEvent> out;
  if (doc.is_array())
    for (const auto& e : doc) out.push_back(event_from_json(e));
  else
    out.push_back(event_from_json(doc));
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

struct ApiServer::Impl {
  Engine& engine;
  ApiOptions options;
  CycleInputs defaults;
  httplib::Server server;
  std::thread worker;
  std::mutex writer;  // serialises mission updates and cycles
  int bound_port = -1;

  Impl(Engine& e, ApiOptions o, CycleInputs d) : engine(e), options(std::move(o)), defaults(std::move(d)) { routes(); }

  Store& store() { return engine.store(); }

  nlohmann::json envelope(std::uint64_t version, const std::string& config_hash) {
    return {{"scoreboard_version", version}, {"config_hash", config_hash}};
  }

  nlohmann::json snapshot_envelope(const Snapshot& s) {
    auto j = envelope(s.version, s.config_hash);
    j["board"] = nlohmann::json::parse(s.board);
    j["mission_hash"] = s.mission_hash;
    j["created_at"] = s.created_at;
    return j;
  }

  nlohmann::json current_envelope() { return envelope(store().latest_version(), engine.config_hash()); }

  CycleResult run_cycle(const nlohmann::json& body) {
    auto active = store().active_mission();
    if (!active) throw NotFoundError("no active mission; POST /missions first");
    CycleInputs in = defaults;
    in.mission = mission_definition_from_json(active->document);
    if (body.contains("tbs")) in.tbs_fixture = body.at("tbs").get<std::map<NodeId, double>>();
    if (body.contains("vbs")) in.vbs_fixture = body.at("vbs").get<std::map<NodeId, double>>();
    if (body.contains("expected")) in.expected = expected_from_json(body.at("expected"));
    if (body.contains("captures")) in.captures = body.at("captures").get<std::vector<std::filesystem::path>>();
    if (body.contains("scans")) in.scan_documents = body.at("scans").get<std::vector<std::string>>();
    if (body.contains("scan_files"))
      for (const auto& f : body.at("scan_files")) in.scan_documents.push_back(read_text(f.get<std::string>()));
    if (body.contains("timestamp")) in.timestamp = body.at("timestamp").get<std::int64_t>();
    return engine.run_cycle(in);
  }

  nlohmann::json cycle_envelope(const CycleResult& r) {
    auto j = envelope(r.version, r.config_hash);
    j["board"] = board_to_json(r.board);
    j["notifications"] = nlohmann::json::array();
    for (const auto& n : r.notifications) j["notifications"].push_back(to_json(n));
    j["calibration"] = r.calibration;
    j["warnings"] = r.warnings;
    return j;
  }

  // Wraps a handler with authentication and error mapping.
  template <typename F>
  httplib::Server::Handler guarded(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      if (!options.bearer_token.empty() && req.get_header_value("Authorization") != "Bearer " + options.bearer_token) {
        reply_error(res, 401, "unauthorized", "missing or invalid bearer token");
        return;
      }
      try {
        f(req, res);
      } catch (...) {
        reply_current_exception(res);
      }
    };
  }

  void routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

    server.Get("/missions", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto j = current_envelope();
      auto active = store().active_mission();
      j["active"] = active ? nlohmann::json{{"hash", active->hash}, {"mission_id", active->mission_id}}
                           : nlohmann::json(nullptr);
      j["missions"] = nlohmann::json::array();
      for (const auto& m : store().missions()) j["missions"].push_back({{"hash", m.hash}, {"mission_id", m.mission_id}});
      reply(res, 200, j);
    }));

    server.Get("/missions/active", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto active = store().active_mission();
      if (!active) throw NotFoundError("no active mission");
      auto j = current_envelope();
      j["hash"] = active->hash;
      j["mission"] = active->document;
      reply(res, 200, j);
    }));

    server.Post("/missions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto def = mission_definition_from_json(parse_body(req));
      const MissionModel model(def);
      StoredMission m{mission_hash(model.definition()), def.mission_id, mission_to_json(model.definition())};
      {
        std::lock_guard lock(writer);
        store().put_mission(m);
      }
      auto j = current_envelope();
      j["hash"] = m.hash;
      j["mission_id"] = m.mission_id;
      reply(res, 201, j);
    }));

    server.Get("/scoreboards", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto j = current_envelope();
      j["versions"] = store().versions();
      reply(res, 200, j);
    }));

    server.Get("/scoreboards/latest", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto latest = store().latest();
      if (!latest) throw NotFoundError("no scoreboard has been persisted yet");
      reply(res, 200, snapshot_envelope(*latest));
    }));

    server.Get(R"(/scoreboards/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto version = std::stoull(req.matches[1].str());
      reply(res, 200, snapshot_envelope(store().get(version)));
    }));

    server.Post("/whatif", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, to_json(what_if(store(), whatif_request_from_json(parse_body(req)))));
    }));

    server.Post("/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto events = events_from_body(req.body);
      const auto n = events.size();
      engine.enqueue(std::move(events));
      if (engine.recompute_due() && store().active_mission()) {
        std::lock_guard lock(writer);
        auto j = cycle_envelope(run_cycle(nlohmann::json::object()));
        j["queued"] = n;
        reply(res, 200, j);
        return;
      }
      auto j = current_envelope();
      j["queued"] = n;
      j["pending"] = engine.pending_events();
      j["recompute_due"] = engine.recompute_due();
      reply(res, 202, j);
    }));

    server.Post("/cycles", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      std::lock_guard lock(writer);
      reply(res, 201, cycle_envelope(run_cycle(body)));
    }));

    server.Get("/inventory", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto j = current_envelope();
      j["inventory"] = to_json(engine.inventory());
      reply(res, 200, j);
    }));
  }
};

ApiServer::ApiServer(Engine& engine, ApiOptions options, CycleInputs defaults)
    : impl_(std::make_unique<Impl>(engine, std::move(options), std::move(defaults))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  auto& s = impl_->server;
  const int port = impl_->options.port == 0 ? s.bind_to_any_port(impl_->options.host)
                                            : (s.bind_to_port(impl_->options.host, impl_->options.port)
                                                   ? impl_->options.port
                                                   : -1);
  if (port < 0)
    throw IoError("cannot listen on " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  impl_->bound_port = port;
  return port;
}

void ApiServer::serve() {
  if (impl_->bound_port < 0) throw Error("serve() before bind()");
  impl_->server.listen_after_bind();
}

int ApiServer::start() {
  const int port = bind();
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int ApiServer::port() const { return impl_->bound_port; }

}  // namespace kct
