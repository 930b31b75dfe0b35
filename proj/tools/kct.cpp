#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kct/api.hpp"
#include "kct/engine.hpp"
#include "kct/error.hpp"
#include "kct/report.hpp"
#include "kct/whatif.hpp"

namespace {

using namespace kct;

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kInvalid = 3 };

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + p.string());
}

// A flat {asset: value} object, optionally nested under `key`.
std::map<NodeId, double> read_metric_fixture(const std::filesystem::path& p, const char* key) {
  auto doc = read_json(p);
  if (doc.is_object() && doc.contains(key) && doc.at(key).is_object()) doc = doc.at(key);
  try {
    return doc.get<std::map<NodeId, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.string() + ": expected an object of asset scores: " + e.what());
  }
}

ScoreWeights parse_weights(const std::string& text) {
  double w[3];
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  if (!(in >> w[0] >> sep1 >> w[1] >> sep2 >> w[2]) || sep1 != ',' || sep2 != ',')
    throw ValidationError("weights must be given as mw,bw,tw");
  return ScoreWeights::make(w[0], w[1], w[2]);
}

// Options shared by commands that evaluate scores.
struct ScoringFlags {
  std::string config;
  std::optional<double> k;
  std::string weights;
  std::string participation;
  std::string orientation;
  bool serial = false;
  std::string vuln_fixtures;
  bool online = false;
  std::string nvd_endpoint;
  std::string cache_dir;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--k", k, "Threshold sensitivity in [0,1]");
    cmd->add_option("--weights", weights, "mw,bw,tw weights summing to 1");
    cmd->add_option("--participation", participation, "assigned | positive-atas");
    cmd->add_option("--tsas-orientation", orientation, "dependents | dependencies");
    cmd->add_flag("--serial", serial, "Use the serial reference kernels");
    cmd->add_option("--vuln-fixtures", vuln_fixtures, "Directory of offline vulnerability documents")
        ->check(CLI::ExistingDirectory);
    cmd->add_flag("--online", online, "Query the NVD API (key from NVD_API_KEY)");
    cmd->add_option("--nvd-endpoint", nvd_endpoint, "NVD CVE API endpoint");
    cmd->add_option("--cache-dir", cache_dir, "Vulnerability cache directory");
  }

  CycleConfig build() const {
    CycleConfig c;
    if (!config.empty()) c = load_config_file(config);
    else apply_environment(c);
    if (k) c.scoring.sensitivity = Sensitivity::make(*k);
    if (!weights.empty()) c.scoring.weights = parse_weights(weights);
    if (!participation.empty()) c.scoring.participation = participation_rule_from_string(participation);
    if (orientation == "dependencies") c.scoring.orientation = TsasOrientation::dependencies;
    else if (orientation == "dependents") c.scoring.orientation = TsasOrientation::dependents;
    else if (!orientation.empty()) throw ValidationError("unknown tsas orientation '" + orientation + "'");
    if (serial) c.scoring.execution = Execution::serial;
    if (!vuln_fixtures.empty()) c.vuln.fixtures_dir = vuln_fixtures;
    if (online) c.vuln.online = true;
    if (!nvd_endpoint.empty()) c.vuln.nvd.endpoint = nvd_endpoint;
    if (!cache_dir.empty()) c.vuln.cache_dir = cache_dir;
    c.validate();
    return c;
  }
};

struct InputFlags {
  std::string tbs_fixture;
  std::string vbs_fixture;
  std::vector<std::string> scans;
  std::string events;
  std::vector<std::string> captures;
  std::string expected;
  std::optional<std::int64_t> timestamp;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--tbs-fixture", tbs_fixture, "JSON object of per-asset TBS values")->check(CLI::ExistingFile);
    cmd->add_option("--vbs-fixture", vbs_fixture, "JSON object of per-asset VBS values")->check(CLI::ExistingFile);
    cmd->add_option("--scan", scans, "Scanner XML output (repeatable)")->check(CLI::ExistingFile);
    cmd->add_option("--events", events, "Discovery events, one JSON object per line")->check(CLI::ExistingFile);
    cmd->add_option("--capture", captures, "pcap or pcapng capture (repeatable)")->check(CLI::ExistingFile);
    cmd->add_option("--expected", expected, "Reference values to check the board against")->check(CLI::ExistingFile);
    cmd->add_option("--timestamp", timestamp, "Cycle time in unix seconds");
  }

  CycleInputs build(const CycleConfig& config) const {
    CycleInputs in;
    if (!tbs_fixture.empty()) in.tbs_fixture = read_metric_fixture(tbs_fixture, "tbs");
    if (!vbs_fixture.empty()) in.vbs_fixture = read_metric_fixture(vbs_fixture, "vbs");
    for (const auto& s : scans) in.scan_documents.push_back(read_text(s));
    if (!events.empty()) in.events = parse_event_stream(read_text(events));
    for (const auto& c : captures) in.captures.emplace_back(c);
    if (!expected.empty()) in.expected = expected_from_json(read_json(expected));
    in.timestamp = timestamp;
    in.vuln_source = make_vuln_source(config.vuln);
    return in;
  }
};

int cmd_score(const std::string& mission_path, const ScoringFlags& sf, const InputFlags& inf,
              const std::string& store_path, const std::string& out_dir, bool quiet) {
  auto config = sf.build();
  std::filesystem::create_directories(out_dir);
  for (auto& sink : config.sinks)
    if (sink.kind == SinkDescriptor::Kind::file && std::filesystem::path(sink.target).is_relative())
      sink.target = (std::filesystem::path(out_dir) / sink.target).string();

  const auto model = load_mission_file(mission_path);
  auto inputs = inf.build(config);
  inputs.mission = model.definition();

  Store store(store_path);
  Engine engine(store, config);
  const auto result = engine.run_cycle(inputs);

  const std::filesystem::path out(out_dir);
  write_text(out / "scoreboard.json", result.board_text);
  const auto tables = render_tables(result.board);
  write_text(out / "scoreboard.txt", tables);
  write_text(out / "calibration.json", result.calibration.dump(2) + "\n");

  if (!quiet) {
    std::cout << "scoreboard version " << result.version << " (config " << result.config_hash << ")\n\n" << tables;
    for (const auto& n : result.notifications)
      if (n.severity != NotificationSeverity::info) std::cout << "[" << to_string(n.severity) << "] " << n.body << "\n";
  }
  for (const auto& w : result.warnings) std::cerr << "kct: warning: " << w << "\n";
  return kOk;
}

kct::ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key cyber terrain scoring engine"};
  app.require_subcommand(1);

  // score
  auto* score = app.add_subcommand("score", "Run one scoring cycle and write reports");
  std::string mission;
  std::string store_path = ":memory:";
  std::string out_dir = ".";
  bool quiet = false;
  ScoringFlags score_flags;
  InputFlags score_inputs;
  score->add_option("--mission", mission, "Mission definition (kct-mission/1)")->required()->check(CLI::ExistingFile);
  score->add_option("--store", store_path, "Versioned store (SQLite file)");
  score->add_option("--out-dir", out_dir, "Directory for scoreboard.json, scoreboard.txt, calibration.json");
  score->add_flag("--quiet", quiet, "Do not print the tables");
  score_flags.add_to(score);
  score_inputs.add_to(score);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  std::string serve_store;
  std::string serve_mission;
  ApiOptions api;
  ScoringFlags serve_flags;
  InputFlags serve_inputs;
  serve->add_option("--store", serve_store, "Versioned store (SQLite file)")->required();
  serve->add_option("--mission", serve_mission, "Mission to activate at start")->check(CLI::ExistingFile);
  serve->add_option("--host", api.host, "Listen address");
  serve->add_option("--port", api.port, "Listen port (0 picks one)");
  serve->add_option("--token", api.bearer_token, "Static bearer token required on every request");
  serve_flags.add_to(serve);
  serve_inputs.add_to(serve);

  // whatif
  auto* whatif = app.add_subcommand("whatif", "Evaluate patches against a persisted version");
  std::string whatif_store;
  std::string patch_file;
  std::uint64_t base = 0;
  std::optional<double> patch_k;
  std::string patch_weights;
  std::vector<std::string> severities, degrees, removals;
  bool whatif_tables = false;
  whatif->add_option("--store", whatif_store, "Versioned store (SQLite file)")->required()->check(CLI::ExistingFile);
  whatif->add_option("--base", base, "Base version (default latest)");
  whatif->add_option("--patch", patch_file, "What-if request document")->check(CLI::ExistingFile);
  whatif->add_option("--k", patch_k, "Override k");
  whatif->add_option("--weights", patch_weights, "Override weights mw,bw,tw");
  whatif->add_option("--severity", severities, "TASK=VALUE (repeatable)");
  whatif->add_option("--degree", degrees, "FROM:TO=VALUE (repeatable)");
  whatif->add_option("--remove-asset", removals, "Asset id (repeatable)");
  whatif->add_flag("--tables", whatif_tables, "Print the patched board as tables instead of JSON");

  // inventory
  auto* inventory = app.add_subcommand("inventory", "Show the asset inventory after applying scans and events");
  std::string inventory_store;
  std::vector<std::string> inventory_scans;
  std::string inventory_events;
  std::int64_t inventory_ts = 0;
  inventory->add_option("--store", inventory_store, "Start from the latest persisted inventory")->check(CLI::ExistingFile);
  inventory->add_option("--scan", inventory_scans, "Scanner XML output (repeatable)")->check(CLI::ExistingFile);
  inventory->add_option("--events", inventory_events, "Discovery events, one JSON object per line")->check(CLI::ExistingFile);
  inventory->add_option("--timestamp", inventory_ts, "Time assigned to scan-derived events");

  // fetch-vulns
  auto* fetch = app.add_subcommand("fetch-vulns", "Look up vulnerabilities for CPE names");
  std::vector<std::string> cpes;
  ScoringFlags fetch_flags;
  fetch->add_option("--cpe", cpes, "CPE name (repeatable)")->required();
  fetch_flags.add_to(fetch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*score) return cmd_score(mission, score_flags, score_inputs, store_path, out_dir, quiet);

    if (*serve) {
      auto config = serve_flags.build();
      Store store(serve_store);
      if (!serve_mission.empty()) {
        const auto model = load_mission_file(serve_mission);
        store.put_mission({mission_hash(model.definition()), model.mission_id(), mission_to_json(model.definition())});
      }
      Engine engine(store, config);
      ApiServer server(engine, api, serve_inputs.build(config));
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "kct: serving on " << api.host << ":" << port << "\n";
      server.serve();
      g_server = nullptr;
      return kOk;
    }

    if (*whatif) {
      WhatIfRequest req;
      if (!patch_file.empty()) req = whatif_request_from_json(read_json(patch_file));
      if (base) req.base_version = base;
      if (patch_k) req.overrides.push_back({Patch::Kind::k, {}, {}, {}, *patch_k, {}});
      if (!patch_weights.empty())
        req.overrides.push_back({Patch::Kind::weights, {}, {}, {}, 0.0, parse_weights(patch_weights)});
      auto split_value = [](const std::string& s) {
        const auto eq = s.rfind('=');
        if (eq == std::string::npos) throw ValidationError("expected KEY=VALUE, got '" + s + "'");
        return std::make_pair(s.substr(0, eq), std::stod(s.substr(eq + 1)));
      };
      for (const auto& s : severities) {
        auto [task, v] = split_value(s);
        req.overrides.push_back({Patch::Kind::task_severity, task, {}, {}, v, {}});
      }
      for (const auto& d : degrees) {
        auto [edge, v] = split_value(d);
        const auto colon = edge.find(':');
        if (colon == std::string::npos) throw ValidationError("expected FROM:TO=VALUE, got '" + d + "'");
        req.overrides.push_back({Patch::Kind::edge_degree, {}, edge.substr(0, colon), edge.substr(colon + 1), v, {}});
      }
      for (const auto& a : removals) req.overrides.push_back({Patch::Kind::asset_removal, a, {}, {}, 0.0, {}});
      const Store store(whatif_store);
      const auto result = what_if(store, req);
      std::cout << (whatif_tables ? render_tables(result.board) : to_json(result).dump(2) + "\n");
      return kOk;
    }

    if (*inventory) {
      Inventory inv;
      if (!inventory_store.empty()) {
        const Store store(inventory_store);
        if (auto latest = store.latest(); latest && latest->inventory.is_object())
          inv = inventory_from_json(latest->inventory);
      }
      if (!inventory_events.empty())
        for (const auto& e : parse_event_stream(read_text(inventory_events))) inv = apply_event(std::move(inv), e);
      std::vector<std::string> warnings;
      for (const auto& s : inventory_scans)
        for (const auto& e : events_from_scan(inv, parse_scan_file(s), inventory_ts, &warnings))
          inv = apply_event(std::move(inv), e);
      for (const auto& w : warnings) std::cerr << "kct: warning: " << w << "\n";
      std::cout << to_json(inv).dump(2) << "\n";
      return kOk;
    }

    if (*fetch) {
      const auto config = fetch_flags.build();
      auto source = make_vuln_source(config.vuln);
      if (!source) throw ValidationError("no vulnerability source: pass --vuln-fixtures or --online");
      std::vector<CpeName> names;
      for (const auto& c : cpes) names.push_back(parse_cpe(c));
      nlohmann::json out = nlohmann::json::object();
      for (const auto& [key, lookup] : fetch_many(names, *source)) {
        nlohmann::json records = nlohmann::json::array();
        for (const auto& r : lookup.records) records.push_back(to_json(r));
        out[key] = {{"known", lookup.known},
                    {"from_cache", lookup.from_cache},
                    {"stale", lookup.stale},
                    {"vbs", vbs(lookup.records)},
                    {"annotation", lookup.known ? "" : "unassessed"},
                    {"records", records}};
      }
      std::cout << out.dump(2) << "\n";
      return kOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "kct: invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "kct: invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "kct: error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
