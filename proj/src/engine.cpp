#include "kct/engine.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "kct/error.hpp"
#include "kct/hash.hpp"
#include "kct/report.hpp"

namespace kct {

namespace {

constexpr std::pair<CycleStep, std::string_view> kStepNames[] = {
    {CycleStep::ingest, "ingest"},   {CycleStep::bind, "bind"},       {CycleStep::vulnerabilities, "vulnerabilities"},
    {CycleStep::traffic, "traffic"}, {CycleStep::score, "score"},     {CycleStep::persist, "persist"},
    {CycleStep::notify, "notify"},   {CycleStep::calibrate, "calibrate"},
};

// Rethrows the in-flight exception with the step prepended, keeping its type.
[[noreturn]] void rethrow_at(CycleStep step) {
  const std::string prefix = "step '" + std::string(to_string(step)) + "': ";
  try {
    throw;
  } catch (const Error& e) {
    // already attributed by an inner step
    if (std::string_view(e.what()).starts_with("step '")) throw;
    try {
      throw;
    } catch (const ParseError& e) {
      throw ParseError(prefix + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(prefix + e.what());
    } catch (const NotFoundError& e) {
      throw NotFoundError(prefix + e.what());
    } catch (const IoError& e) {
      throw IoError(prefix + e.what());
    } catch (const NetworkError& e) {
      throw NetworkError(prefix + e.what());
    } catch (const Error& e) {
      throw Error(prefix + e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

Sensitivity sensitivity_from_json(const nlohmann::json& v) {
  if (v.is_number()) return Sensitivity::make(v.get<double>());
  const auto s = v.get<std::string>();
  if (s == "optimistic") return Sensitivity::optimistic();
  if (s == "medium") return Sensitivity::medium();
  if (s == "pessimistic") return Sensitivity::pessimistic();
  throw ValidationError("unknown sensitivity preset '" + s + "'");
}

TsasOrientation orientation_from_string(const std::string& s) {
  if (s == "dependents") return TsasOrientation::dependents;
  if (s == "dependencies") return TsasOrientation::dependencies;
  throw ValidationError("unknown tsas_orientation '" + s + "'");
}

std::string_view to_string(TsasOrientation o) { return o == TsasOrientation::dependents ? "dependents" : "dependencies"; }

nlohmann::json options_to_json(const ScoringOptions& o) {
  return {{"weights", {{"mw", o.weights.mw}, {"bw", o.weights.bw}, {"tw", o.weights.tw}}},
          {"k", o.sensitivity.k},
          {"participation", to_string(o.participation)},
          {"tsas_orientation", to_string(o.orientation)}};
}

ScoringOptions options_from_json(const nlohmann::json& j, ScoringOptions o = {}) {
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    o.weights = ScoreWeights::make(w.value("mw", o.weights.mw), w.value("bw", o.weights.bw), w.value("tw", o.weights.tw));
  }
  if (j.contains("k")) o.sensitivity = sensitivity_from_json(j.at("k"));
  if (j.contains("participation"))
    o.participation = participation_rule_from_string(j.at("participation").get<std::string>());
  if (j.contains("tsas_orientation")) o.orientation = orientation_from_string(j.at("tsas_orientation"));
  if (j.contains("execution")) {
    const auto e = j.at("execution").get<std::string>();
    if (e != "serial" && e != "parallel") throw ValidationError("unknown execution '" + e + "'");
    o.execution = e == "serial" ? Execution::serial : Execution::parallel;
  }
  return o;
}

nlohmann::json expected_to_json(const ExpectedValues& e) {
  nlohmann::json j{{"tacs", e.tacs}, {"tth", e.tth}, {"macs", e.macs}, {"task_kcts", e.task_kcts},
                   {"tolerance", e.tolerance}};
  if (e.mth) j["mth"] = *e.mth;
  if (e.mission_kcts) j["mission_kcts"] = *e.mission_kcts;
  return j;
}

std::string join(const std::set<NodeId>& ids) {
  std::string s = "{";
  for (const auto& id : ids) s += (s.size() > 1 ? ", " : "") + id;
  return s + "}";
}

std::set<NodeId> set_difference(const std::set<NodeId>& a, const std::set<NodeId>& b) {
  std::set<NodeId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

const AssetRecord* bind_record(const AssetNode& asset, const Inventory& inv) {
  if (auto it = inv.assets.find(asset.id); it != inv.assets.end()) return &it->second;
  for (const auto& [id, r] : inv.assets) {
    for (const auto& addr : asset.addresses)
      if (r.addresses.count(addr)) return &r;
    if (r.hostnames.count(asset.id) || r.hostnames.count(asset.label)) return &r;
  }
  return nullptr;
}

std::vector<Notification> build_notifications(const ScoreBoard& board, const std::optional<ScoreBoard>& prior,
                                              const std::string& mission_id, std::uint64_t version) {
  std::vector<Notification> out;
  const std::set<NodeId> before = prior ? prior->mission_kcts : std::set<NodeId>{};
  const auto gained = set_difference(board.mission_kcts, before);
  const auto lost = set_difference(before, board.mission_kcts);

  std::vector<NodeId> changed_tasks;
  std::set<NodeId> all_tasks(board.task_ids.begin(), board.task_ids.end());
  if (prior) all_tasks.insert(prior->task_ids.begin(), prior->task_ids.end());
  for (const auto& t : all_tasks) {
    auto kcts_of = [&](const ScoreBoard& b) {
      auto it = b.task_kcts.find(t);
      return it == b.task_kcts.end() ? std::set<NodeId>{} : it->second;
    };
    const auto now = kcts_of(board);
    const auto then = prior ? kcts_of(*prior) : std::set<NodeId>{};
    if (now != then) changed_tasks.push_back(t);
  }

  if (!gained.empty() || !lost.empty() || !changed_tasks.empty()) {
    Notification n{NotificationSeverity::kct_change, {}, {}, version};
    std::set<NodeId> diff = gained;
    diff.insert(lost.begin(), lost.end());
    n.subject.assign(diff.begin(), diff.end());
    n.subject.insert(n.subject.end(), changed_tasks.begin(), changed_tasks.end());
    n.body = "mission KCTs now " + join(board.mission_kcts) + " (gained " + join(gained) + ", lost " + join(lost) + ")";
    for (const auto& t : changed_tasks) {
      auto it = board.task_kcts.find(t);
      n.body += "; " + t + " KCTs " + join(it == board.task_kcts.end() ? std::set<NodeId>{} : it->second);
    }
    out.push_back(std::move(n));
  }
  for (const auto& note : board.notes) {
    Notification n{NotificationSeverity::discrepancy, {}, note.message, version};
    std::size_t start = 0;
    while (start <= note.subject.size()) {
      const auto slash = std::min(note.subject.find('/', start), note.subject.size());
      n.subject.push_back(note.subject.substr(start, slash - start));
      start = slash + 1;
    }
    out.push_back(std::move(n));
  }
  out.push_back({NotificationSeverity::info,
                 std::vector<std::string>(board.mission_kcts.begin(), board.mission_kcts.end()),
                 "scoreboard version " + std::to_string(version) + " for mission " + mission_id + ": " +
                     std::to_string(board.mission_kcts.size()) + " mission KCTs",
                 version});
  return out;
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("webhook target must be an absolute URL: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

std::string_view to_string(CycleStep step) {
  for (auto [s, name] : kStepNames)
    if (s == step) return name;
  return "unknown";
}

std::string_view to_string(NotificationSeverity s) {
  switch (s) {
    case NotificationSeverity::info: return "info";
    case NotificationSeverity::kct_change: return "kct-change";
    case NotificationSeverity::discrepancy: return "discrepancy";
  }
  return "info";
}

nlohmann::json to_json(const Notification& n) {
  return {{"severity", to_string(n.severity)}, {"subject", n.subject}, {"body", n.body},
          {"scoreboard_version", n.scoreboard_version}};
}

// --- configuration -------------------------------------------------------------

void CycleConfig::validate() const {
  scoring.weights.validate();
  Sensitivity::make(scoring.sensitivity.k);
  if (sinks.empty()) throw ValidationError("at least one notification sink is required");
  for (const auto& s : sinks)
    if (s.target.empty()) throw ValidationError("notification sink without a target");
}

CipherSuitePolicy CycleConfig::cipher_policy() const {
  return cipher_policy_file.empty() ? CipherSuitePolicy::defaults() : CipherSuitePolicy::from_file(cipher_policy_file);
}

std::string CycleConfig::hash() const {
  const auto policy = cipher_policy();
  nlohmann::json j = options_to_json(scoring);
  j["cipher_policy"] = {{"confidentiality_secured", policy.confidentiality_secured},
                        {"integrity_secured", policy.integrity_secured}};
  return fnv1a64_hex(j.dump());
}

CycleConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("configuration must be a JSON object");
  CycleConfig c;
  try {
    c.scoring = options_from_json(j);
    if (j.contains("recompute_triggers")) {
      c.recompute_triggers.clear();
      for (const auto& k : j.at("recompute_triggers")) c.recompute_triggers.insert(event_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("sinks")) {
      c.sinks.clear();
      for (const auto& s : j.at("sinks")) {
        const auto type = s.value("type", "file");
        if (type != "file" && type != "webhook") throw ValidationError("unknown sink type '" + type + "'");
        c.sinks.push_back({type == "file" ? SinkDescriptor::Kind::file : SinkDescriptor::Kind::webhook,
                           s.value("target", "")});
      }
    }
    c.cipher_policy_file = j.value("cipher_policy", "");
    if (j.contains("vulnerability")) {
      const auto& v = j.at("vulnerability");
      c.vuln.fixtures_dir = v.value("fixtures", "");
      c.vuln.online = v.value("online", false);
      c.vuln.nvd.endpoint = v.value("endpoint", c.vuln.nvd.endpoint);
      c.vuln.nvd.api_key = v.value("api_key", "");
      c.vuln.nvd.max_attempts = v.value("max_attempts", c.vuln.nvd.max_attempts);
      c.vuln.nvd.backoff = std::chrono::milliseconds(v.value("backoff_ms", c.vuln.nvd.backoff.count()));
      c.vuln.nvd.timeout = std::chrono::seconds(v.value("timeout_seconds", c.vuln.nvd.timeout.count()));
      c.vuln.cache_dir = v.value("cache_dir", "");
      c.vuln.cache_ttl = std::chrono::seconds(v.value("cache_ttl_seconds", c.vuln.cache_ttl.count()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("configuration: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const CycleConfig& c) {
  nlohmann::json j = options_to_json(c.scoring);
  j["execution"] = c.scoring.execution == Execution::serial ? "serial" : "parallel";
  j["recompute_triggers"] = nlohmann::json::array();
  for (auto k : c.recompute_triggers) j["recompute_triggers"].push_back(to_string(k));
  j["sinks"] = nlohmann::json::array();
  for (const auto& s : c.sinks)
    j["sinks"].push_back({{"type", s.kind == SinkDescriptor::Kind::file ? "file" : "webhook"}, {"target", s.target}});
  if (!c.cipher_policy_file.empty()) j["cipher_policy"] = c.cipher_policy_file;
  j["vulnerability"] = {{"fixtures", c.vuln.fixtures_dir},
                        {"online", c.vuln.online},
                        {"endpoint", c.vuln.nvd.endpoint},
                        {"cache_dir", c.vuln.cache_dir},
                        {"cache_ttl_seconds", c.vuln.cache_ttl.count()},
                        {"max_attempts", c.vuln.nvd.max_attempts},
                        {"backoff_ms", c.vuln.nvd.backoff.count()},
                        {"timeout_seconds", c.vuln.nvd.timeout.count()}};
  return j;
}

CycleConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  auto config = config_from_json(doc);
  apply_environment(config);
  return config;
}

void apply_environment(CycleConfig& config) {
  if (const char* key = std::getenv("NVD_API_KEY"); key && *key) config.vuln.nvd.api_key = key;
}

std::shared_ptr<VulnSource> make_vuln_source(const VulnConfig& config, Clock clock) {
  std::shared_ptr<VulnSource> source;
  if (!config.fixtures_dir.empty())
    source = std::make_shared<OfflineSource>(config.fixtures_dir, clock);
  else if (config.online)
    source = std::make_shared<NvdSource>(config.nvd, clock);
  if (source && !config.cache_dir.empty())
    source = std::make_shared<CachedSource>(source, config.cache_dir, config.cache_ttl, clock);
  return source;
}

// --- evaluation ----------------------------------------------------------------

ScoreBoard evaluate(const EvaluationInputs& in) {
  auto board = score_mission(MissionModel(in.mission), in.tbs, in.vbs, in.options);
  for (const auto& [asset, notes] : in.annotations)
    if (!notes.empty()) board.annotations[asset] = notes;
  if (in.expected) board.notes = find_discrepancies(board, *in.expected);
  return board;
}

nlohmann::json to_json(const EvaluationInputs& in) {
  return {{"mission", mission_to_json(in.mission)},
          {"tbs", in.tbs},
          {"vbs", in.vbs},
          {"annotations", in.annotations},
          {"expected", in.expected ? expected_to_json(*in.expected) : nlohmann::json(nullptr)},
          {"options", options_to_json(in.options)}};
}

EvaluationInputs evaluation_inputs_from_json(const nlohmann::json& j) {
  EvaluationInputs in;
  try {
    in.mission = mission_definition_from_json(j.at("mission"));
    j.at("tbs").get_to(in.tbs);
    j.at("vbs").get_to(in.vbs);
    if (j.contains("annotations")) j.at("annotations").get_to(in.annotations);
    if (j.contains("expected") && !j.at("expected").is_null()) in.expected = expected_from_json(j.at("expected"));
    in.options = options_from_json(j.value("options", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("evaluation inputs: ") + e.what());
  }
  return in;
}

std::string mission_hash(const MissionDefinition& mission) { return fnv1a64_hex(mission_to_json(mission).dump()); }

// --- calibration ---------------------------------------------------------------

std::vector<CalibrationRequest> request_calibration(const std::vector<EvidenceGap>& gaps) {
  std::vector<CalibrationRequest> out;
  for (const auto& g : gaps) {
    if (g.missing_cpe)
      out.push_back({g.asset_id, "cpe-resolution", "no CPE name bound; vulnerability score is unassessed"});
    if (g.missing_traffic)
      out.push_back({g.asset_id, "traffic-visibility", "no captured connection involves this asset"});
    if (g.stale_vulnerabilities)
      out.push_back({g.asset_id, "vulnerability-intel", "vulnerability data is stale or the source is unavailable"});
  }
  return out;
}

nlohmann::json calibration_document(const std::vector<CalibrationRequest>& requests, std::uint64_t version) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : requests) list.push_back({{"asset_id", r.asset_id}, {"kind", r.kind}, {"detail", r.detail}});
  return {{"scoreboard_version", version}, {"requests", list}};
}

// --- engine --------------------------------------------------------------------

Engine::Engine(Store& store, CycleConfig config, Clock clock)
    : store_(store), config_(std::move(config)), clock_(std::move(clock)) {
  config_.validate();
  config_hash_ = config_.hash();
}

void Engine::enqueue(std::vector<DiscoveryEvent> events) {
  std::lock_guard lock(queue_mu_);
  for (auto& e : events) queue_.push_back(std::move(e));
}

std::size_t Engine::pending_events() const {
  std::lock_guard lock(queue_mu_);
  return queue_.size();
}

bool Engine::recompute_due() const {
  std::lock_guard lock(queue_mu_);
  return std::any_of(queue_.begin(), queue_.end(),
                     [&](const auto& e) { return config_.recompute_triggers.count(e.kind) > 0; });
}

Inventory Engine::inventory() const {
  auto latest = store_.latest();
  return latest && latest->inventory.is_object() ? inventory_from_json(latest->inventory) : Inventory{};
}

CycleResult Engine::run_cycle(const CycleInputs& inputs) {
  std::lock_guard cycle_lock(cycle_mu_);

  std::vector<DiscoveryEvent> buffered;
  {
    std::lock_guard lock(queue_mu_);
    buffered.assign(queue_.begin(), queue_.end());
    queue_.clear();
  }
  auto restore_queue = [&] {
    std::lock_guard lock(queue_mu_);
    queue_.insert(queue_.begin(), buffered.begin(), buffered.end());
  };

  auto run = [&](CycleStep s, auto&& body) {
    try {
      if (fault_hook_) fault_hook_(s);
      return body();
    } catch (...) {
      rethrow_at(s);
    }
  };

  try {
    CycleResult result;
    result.config_hash = config_hash_;
    const std::int64_t now = inputs.timestamp ? *inputs.timestamp : clock_();
    const CipherSuitePolicy policy = config_.cipher_policy();

    // Observe: apply discovery events and scans, read captures.
    std::optional<Snapshot> prior;
    CaptureIngest capture;
    run(CycleStep::ingest, [&] {
      prior = store_.latest();
      Inventory inv = prior && prior->inventory.is_object() ? inventory_from_json(prior->inventory) : Inventory{};
      std::vector<DiscoveryEvent> events = buffered;
      events.insert(events.end(), inputs.events.begin(), inputs.events.end());
      std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
      for (const auto& e : events) inv = apply_event(std::move(inv), e);
      for (const auto& doc : inputs.scan_documents)
        for (const auto& e : events_from_scan(inv, parse_scan(doc), now, &result.warnings))
          inv = apply_event(std::move(inv), e);
      if (!inputs.captures.empty()) capture = ingest_capture_files(inputs.captures);
      result.warnings.insert(result.warnings.end(), capture.warnings.begin(), capture.warnings.end());
      result.inventory = std::move(inv);
    });

    // Orient: bind mission assets to discovered records.
    std::optional<MissionModel> model;
    AddressMap addresses;
    std::map<NodeId, std::optional<std::string>> cpes;
    run(CycleStep::bind, [&] {
      model.emplace(inputs.mission);
      if (model->asset_count() == 0) throw ValidationError("mission has no assets to bind");
      for (const auto& asset : model->assets()) {
        const AssetRecord* rec = bind_record(asset, result.inventory);
        if (rec && rec->state == AssetState::removed) {
          result.warnings.push_back("asset " + asset.id + " is bound to a removed inventory record");
          rec = nullptr;
        }
        std::set<std::string> ips(asset.addresses.begin(), asset.addresses.end());
        if (rec) ips.insert(rec->addresses.begin(), rec->addresses.end());
        for (const auto& ip : ips) {
          auto [it, inserted] = addresses.emplace(ip, asset.id);
          if (!inserted && it->second != asset.id)
            result.warnings.push_back("address " + ip + " claimed by " + it->second + " and " + asset.id +
                                      "; attributed to " + it->second);
        }
        cpes[asset.id] = asset.cpe ? asset.cpe : rec ? rec->cpe : std::nullopt;
      }
    });

    std::map<NodeId, EvidenceGap> gaps;
    for (const auto& a : model->assets()) gaps[a.id].asset_id = a.id;

    EvaluationInputs eval;
    eval.options = config_.scoring;
    eval.expected = inputs.expected;

    run(CycleStep::vulnerabilities, [&] {
      std::vector<CpeName> wanted;
      std::map<NodeId, CpeName> parsed;
      for (const auto& a : model->assets()) {
        if (inputs.vbs_fixture && inputs.vbs_fixture->count(a.id)) continue;
        const auto& raw = cpes[a.id];
        if (!raw) {
          gaps[a.id].missing_cpe = true;
          continue;
        }
        auto cpe = parse_cpe(*raw);
        parsed.emplace(a.id, cpe);
        wanted.push_back(std::move(cpe));
      }
      std::map<std::string, VulnLookup> found;
      if (inputs.vuln_source && !wanted.empty()) found = fetch_many(wanted, *inputs.vuln_source);
      for (const auto& a : model->assets()) {
        if (inputs.vbs_fixture) {
          if (auto it = inputs.vbs_fixture->find(a.id); it != inputs.vbs_fixture->end()) {
            eval.vbs[a.id] = it->second;
            continue;
          }
        }
        eval.vbs[a.id] = 0.0;
        auto p = parsed.find(a.id);
        if (p == parsed.end()) {
          eval.annotations[a.id].push_back("unassessed");
          continue;
        }
        auto f = found.find(p->second.formatted());
        if (f == found.end() || !f->second.known) {
          eval.annotations[a.id].push_back("unassessed");
          if (f == found.end()) gaps[a.id].stale_vulnerabilities = true;
          continue;
        }
        eval.vbs[a.id] = vbs(f->second.records);
        if (f->second.stale) {
          eval.annotations[a.id].push_back("stale");
          gaps[a.id].stale_vulnerabilities = true;
        }
      }
    });

    run(CycleStep::traffic, [&] {
      std::vector<NodeId> ids;
      for (const auto& a : model->assets()) ids.push_back(a.id);
      result.traffic = compute_metrics(capture.records, addresses, policy, ids);
      bool measured = false;  // some asset scores from captured traffic
      for (const auto& id : ids) {
        if (inputs.tbs_fixture) {
          if (auto it = inputs.tbs_fixture->find(id); it != inputs.tbs_fixture->end()) {
            eval.tbs[id] = it->second;
            continue;
          }
        }
        measured = true;
        const auto& t = result.traffic.assets.at(id);
        eval.tbs[id] = t.tbs;
        if (t.asset_connections == 0) gaps[id].missing_traffic = true;
      }
      if (measured || !capture.records.empty())
        result.warnings.insert(result.warnings.end(), result.traffic.warnings.begin(), result.traffic.warnings.end());
    });

    // Decide: score.
    run(CycleStep::score, [&] {
      eval.mission = model->definition();
      result.board = evaluate(eval);
      result.board_text = serialize_board(result.board);
    });

    std::optional<ScoreBoard> prior_board;
    if (prior) prior_board = board_from_json(nlohmann::json::parse(prior->board));

    // Act: persist, with notification and calibration inside the transaction.
    run(CycleStep::persist, [&] {
      SnapshotInput snap;
      snap.mission = mission_to_json(eval.mission);
      snap.mission_hash = fnv1a64_hex(snap.mission.dump());
      snap.inputs = to_json(eval);
      snap.board = result.board_text;
      snap.config_hash = config_hash_;
      snap.inventory = to_json(result.inventory);
      snap.created_at = now;
      result.version = store_.append(snap, [&](std::uint64_t version) {
        run(CycleStep::notify, [&] {
          result.notifications = build_notifications(result.board, prior_board, model->mission_id(), version);
        });
        run(CycleStep::calibrate, [&] {
          std::vector<EvidenceGap> list;
          for (const auto& [id, g] : gaps) list.push_back(g);
          result.calibration = calibration_document(request_calibration(list), version);
        });
      });
    });

    dispatch(result.notifications, result.warnings);
    return result;
  } catch (...) {
    restore_queue();
    throw;
  }
}

void Engine::dispatch(const std::vector<Notification>& notes, std::vector<std::string>& warnings) const {
  for (const auto& sink : config_.sinks) {
    try {
      if (sink.kind == SinkDescriptor::Kind::file) {
        std::ofstream out(sink.target, std::ios::app);
        if (!out) throw IoError("cannot open " + sink.target);
        for (const auto& n : notes) out << to_json(n).dump() << '\n';
      } else {
        const auto [base, path] = split_url(sink.target);
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::seconds(5));
        for (const auto& n : notes) {
          auto res = client.Post(path, to_json(n).dump(), "application/json");
          if (!res || res->status / 100 != 2)
            throw NetworkError(res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error()));
        }
      }
    } catch (const std::exception& e) {
      warnings.push_back("notification sink " + sink.target + " failed: " + e.what());
    }
  }
}

}  // namespace kct
