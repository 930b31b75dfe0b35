#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kct/cipher_suites.hpp"
#include "kct/mission.hpp"
#include "kct/pcap.hpp"

namespace kct {

struct Endpoint {
  std::string ip;
  std::uint16_t port = 0;
  auto operator<=>(const Endpoint&) const = default;
};

/// One conversation between two endpoints, direction-agnostic.
/// `endpoint_a` is the lexicographically smaller endpoint.
struct ConnectionRecord {
  Endpoint endpoint_a;
  Endpoint endpoint_b;
  pcap::Transport transport = pcap::Transport::tcp;
  std::uint64_t byte_count = 0;
  std::uint64_t packet_count = 0;
  bool tls_observed = false;
  std::optional<CipherSuiteId> cipher_suite;  // only with tls_observed

  bool operator==(const ConnectionRecord&) const = default;
};

struct CaptureIngest {
  std::vector<ConnectionRecord> records;
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// One pass over a pcap/pcapng image. TLS is recognised from handshake
/// records on any port; the cipher suite is the one the server hello
/// selects. Throws ParseError for an unrecognised file; a stream cut short
/// returns what was parsed with `truncated` set.
CaptureIngest ingest_capture(std::span<const std::uint8_t> capture);
CaptureIngest ingest_capture_file(const std::filesystem::path& path);

/// Ingests several files concurrently and merges records that describe the
/// same connection.
CaptureIngest ingest_capture_files(const std::vector<std::filesystem::path>& paths);

/// Combines records with the same endpoints and transport; output sorted.
std::vector<ConnectionRecord> merge_records(std::vector<ConnectionRecord> records);

// --- traffic equations ---------------------------------------------------------

/// 1 / (1 + 100 e^{-0.1 x}) for a traffic percentage x. Inputs outside
/// [0,100] are clamped and a warning is appended when `warnings` is given.
double sigmoid(double x, std::vector<std::string>* warnings = nullptr);

/// sig + (1 - r/n) - sig (1 - r/n). Throws ValidationError unless
/// 1 <= rank <= connections.
double ranking_reward(double sig, std::size_t rank, std::size_t connections);

/// 3/5 sigmoid(share) + 2/5 ranking_reward(sigmoid(share), rank, connections).
double availability(double share_percent, std::size_t rank, std::size_t connections);

/// 3/5 tls_fraction + 2/5 secured_fraction. Throws ValidationError when a
/// fraction is outside [0,1] or secured_fraction > tls_fraction.
double confidentiality(double tls_fraction, double secured_fraction);
double integrity(double tls_integrity_fraction, double secured_fraction);

inline constexpr std::string_view kUnattributed = "unattributed";

using AddressMap = std::map<std::string, NodeId>;  // IP text -> asset id

struct AssetTraffic {
  double avail = 0.0;
  double conf = 0.0;
  double integ = 0.0;
  double tbs = 0.0;
  double traffic_share_percent = 0.0;
  std::size_t rank = 0;         // of the asset's busiest connection, 1 = busiest
  std::size_t connections = 0;  // global distinct connection count
  std::size_t asset_connections = 0;
  std::uint64_t bytes = 0;

  bool operator==(const AssetTraffic&) const = default;
};

struct TrafficMetrics {
  std::map<NodeId, AssetTraffic> assets;
  std::vector<std::string> warnings;
};

/// Per-asset availability, confidentiality, integrity and TBS. Every id in
/// `expected_assets` gets an entry even without traffic; addresses missing
/// from `addresses` are grouped under kUnattributed.
TrafficMetrics compute_metrics(std::span<const ConnectionRecord> records, const AddressMap& addresses,
                               const CipherSuitePolicy& policy, std::span<const NodeId> expected_assets = {});

}  // namespace kct
