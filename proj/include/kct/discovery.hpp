#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "kct/cpe.hpp"
#include "kct/mission.hpp"

namespace kct {

struct PortService {
  std::uint16_t port = 0;
  std::string protocol;  // "tcp", "udp"
  std::string service;
  std::string version;
  std::string cpe;  // as emitted by the scanner, may be empty

  auto operator<=>(const PortService&) const = default;
};

enum class AssetState { active, removed };
enum class EventKind { discovery, removal, modification, notification };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

struct LifecycleEntry {
  EventKind kind;
  std::int64_t timestamp = 0;
  std::string detail;
  bool operator==(const LifecycleEntry&) const = default;
};

struct AssetRecord {
  NodeId asset_id;
  std::set<std::string> addresses;
  std::set<std::string> hostnames;
  std::set<PortService> open_ports;
  std::optional<std::string> cpe;  // chosen product CPE, raw scanner form
  std::string os_cpe;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  AssetState state = AssetState::active;
  bool needs_manual_cpe = false;       // services seen but no CPE reported
  bool needs_cpe_resolution = false;   // CPE or service versions changed
  std::vector<LifecycleEntry> history;
  std::vector<std::string> annotations;

  /// Stable hash of the (port, protocol, service) set.
  std::string fingerprint() const;
  bool operator==(const AssetRecord&) const = default;
};

/// Parses an Nmap-compatible <nmaprun> document. One record per host that
/// is up; asset_id is the host's primary IP address. Throws ParseError for
/// malformed XML or a different root element.
std::vector<AssetRecord> parse_scan(std::string_view xml);
std::vector<AssetRecord> parse_scan_file(const std::filesystem::path& path);

/// Renders records back into an <nmaprun> document that parse_scan reads to
/// equal records.
std::string write_scan(const std::vector<AssetRecord>& records);

struct DiscoveryEvent {
  EventKind kind = EventKind::discovery;
  NodeId asset_id;
  nlohmann::json payload = nlohmann::json::object();
  std::int64_t timestamp = 0;
};

DiscoveryEvent event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiscoveryEvent& e);
/// One JSON event per non-empty line.
std::vector<DiscoveryEvent> parse_event_stream(std::string_view text);

struct Inventory {
  std::map<NodeId, AssetRecord> assets;
  std::vector<DiscoveryEvent> pending_notifications;  // for assets not yet discovered
  std::uint64_t events_applied = 0;
  bool operator==(const Inventory& o) const;
};

/// Applies one event and returns the updated inventory. Removal and
/// modification of an unknown asset throw NotFoundError; a notification for
/// an unknown asset is queued until it is discovered.
Inventory apply_event(Inventory inventory, const DiscoveryEvent& event);

/// Turns a scan result into discovery/modification events against the
/// current inventory. Hosts whose fingerprint changed are reported in
/// `warnings` and resolved toward the scan.
std::vector<DiscoveryEvent> events_from_scan(const Inventory& inventory, const std::vector<AssetRecord>& scan,
                                             std::int64_t timestamp, std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const AssetRecord& r);
AssetRecord asset_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Inventory& inv);
Inventory inventory_from_json(const nlohmann::json& j);

}  // namespace kct
