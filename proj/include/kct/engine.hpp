#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kct/cipher_suites.hpp"
#include "kct/discovery.hpp"
#include "kct/mission.hpp"
#include "kct/score.hpp"
#include "kct/store.hpp"
#include "kct/traffic.hpp"
#include "kct/vuln.hpp"

namespace kct {

enum class CycleStep { ingest, bind, vulnerabilities, traffic, score, persist, notify, calibrate };

inline constexpr CycleStep kCycleSteps[] = {CycleStep::ingest,  CycleStep::bind,    CycleStep::vulnerabilities,
                                            CycleStep::traffic, CycleStep::score,   CycleStep::persist,
                                            CycleStep::notify,  CycleStep::calibrate};

std::string_view to_string(CycleStep step);

struct SinkDescriptor {
  enum class Kind { file, webhook };
  Kind kind = Kind::file;
  std::string target;  // file path or http(s) URL
  bool operator==(const SinkDescriptor&) const = default;
};

struct VulnConfig {
  std::string fixtures_dir;  // offline NVD-shaped documents
  bool online = false;       // query the NVD API
  NvdOptions nvd;
  std::string cache_dir;     // empty disables caching
  std::chrono::seconds cache_ttl{std::chrono::hours(24)};
};

struct CycleConfig {
  ScoringOptions scoring;
  std::set<EventKind> recompute_triggers{EventKind::discovery, EventKind::removal, EventKind::modification};
  std::vector<SinkDescriptor> sinks{{SinkDescriptor::Kind::file, "kct-notifications.jsonl"}};
  std::string cipher_policy_file;  // empty selects the default policy
  VulnConfig vuln;

  /// Throws ValidationError on invalid weights, k, or an empty sink list.
  void validate() const;
  CipherSuitePolicy cipher_policy() const;
  /// Digest of every setting that influences scores.
  std::string hash() const;
};

/// Reads a configuration document. Keys mirror the CLI flags: "weights"
/// {mw, bw, tw}, "k" (number or optimistic|medium|pessimistic),
/// "participation", "tsas_orientation", "execution", "recompute_triggers",
/// "sinks" [{type: file|webhook, target}], "cipher_policy", "vulnerability"
/// {fixtures, online, endpoint, api_key, cache_dir, cache_ttl_seconds,
/// max_attempts, backoff_ms, timeout_seconds}.
CycleConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const CycleConfig& config);
/// config_from_json on a file, then environment overrides (NVD_API_KEY).
CycleConfig load_config_file(const std::filesystem::path& path);
void apply_environment(CycleConfig& config);

/// Builds the vulnerability source the configuration describes, or null
/// when none is configured.
std::shared_ptr<VulnSource> make_vuln_source(const VulnConfig& config, Clock clock = system_clock());

/// Everything score-relevant about one evaluation. Persisted with each
/// snapshot so any version can be re-evaluated exactly.
struct EvaluationInputs {
  MissionDefinition mission;
  std::map<NodeId, double> tbs;
  std::map<NodeId, double> vbs;
  std::map<NodeId, std::vector<std::string>> annotations;
  std::optional<ExpectedValues> expected;
  ScoringOptions options;
};

/// score_mission plus annotations and discrepancy notes.
ScoreBoard evaluate(const EvaluationInputs& inputs);
nlohmann::json to_json(const EvaluationInputs& inputs);
EvaluationInputs evaluation_inputs_from_json(const nlohmann::json& doc);

struct CycleInputs {
  MissionDefinition mission;
  std::vector<std::string> scan_documents;  // scanner XML text
  std::vector<DiscoveryEvent> events;
  std::vector<std::filesystem::path> captures;
  std::optional<std::map<NodeId, double>> tbs_fixture;  // overrides capture-derived values
  std::optional<std::map<NodeId, double>> vbs_fixture;  // overrides looked-up values
  std::shared_ptr<VulnSource> vuln_source;
  std::optional<ExpectedValues> expected;
  std::optional<std::int64_t> timestamp;  // cycle time; the engine clock when absent
};

enum class NotificationSeverity { info, kct_change, discrepancy };
std::string_view to_string(NotificationSeverity s);

struct Notification {
  NotificationSeverity severity = NotificationSeverity::info;
  std::vector<std::string> subject;  // asset and task ids
  std::string body;
  std::uint64_t scoreboard_version = 0;
};

nlohmann::json to_json(const Notification& n);

/// Evidence an asset lacks after a cycle.
struct EvidenceGap {
  NodeId asset_id;
  bool missing_cpe = false;
  bool missing_traffic = false;
  bool stale_vulnerabilities = false;
};

struct CalibrationRequest {
  NodeId asset_id;
  std::string kind;  // "cpe-resolution", "traffic-visibility", "vulnerability-intel"
  std::string detail;
};

std::vector<CalibrationRequest> request_calibration(const std::vector<EvidenceGap>& gaps);
nlohmann::json calibration_document(const std::vector<CalibrationRequest>& requests, std::uint64_t version);

struct CycleResult {
  std::uint64_t version = 0;
  ScoreBoard board;
  std::string board_text;  // serialize_board(board)
  std::vector<Notification> notifications;
  nlohmann::json calibration;
  std::vector<std::string> warnings;
  std::string config_hash;
  TrafficMetrics traffic;
  Inventory inventory;
};

/// Runs the observe-orient-decide-act cycle against a store. Cycles are
/// serialised; reads of the store may proceed concurrently. A failing step
/// aborts the cycle with an error of the original type whose message names
/// the step, and nothing is persisted.
class Engine {
 public:
  Engine(Store& store, CycleConfig config, Clock clock = system_clock());

  CycleResult run_cycle(const CycleInputs& inputs);

  /// Buffers events for the next cycle. Thread-safe.
  void enqueue(std::vector<DiscoveryEvent> events);
  std::size_t pending_events() const;
  /// True when a buffered event has a kind listed in recompute_triggers.
  bool recompute_due() const;

  /// Called at the start of every step; a throw aborts the cycle there.
  void set_fault_hook(std::function<void(CycleStep)> hook) { fault_hook_ = std::move(hook); }

  const CycleConfig& config() const { return config_; }
  std::string config_hash() const { return config_hash_; }
  /// Inventory of the latest persisted version (empty for a fresh store).
  Inventory inventory() const;
  Store& store() { return store_; }

 private:
  void dispatch(const std::vector<Notification>& notes, std::vector<std::string>& warnings) const;

  Store& store_;
  CycleConfig config_;
  std::string config_hash_;
  Clock clock_;
  std::function<void(CycleStep)> fault_hook_;
  std::mutex cycle_mu_;
  mutable std::mutex queue_mu_;
  std::deque<DiscoveryEvent> queue_;
};

/// Fingerprint of a mission definition (canonical JSON).
std::string mission_hash(const MissionDefinition& mission);

}  // namespace kct
