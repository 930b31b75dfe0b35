#include "kct/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <set>
#include <tuple>

#include "kct/error.hpp"
#include "kct/tls.hpp"

namespace kct {

namespace {

constexpr std::size_t kStreamPrefix = 16 * 1024;

using FlowKey = std::tuple<Endpoint, Endpoint, pcap::Transport>;

// Leading in-order bytes of one direction of a TCP connection; enough to
// hold the hello messages.
struct DirectionBuffer {
  bool started = false;
  std::uint32_t next_seq = 0;
  std::vector<std::uint8_t> bytes;

  void add(std::uint32_t seq, std::span<const std::uint8_t> payload) {
    if (payload.empty() || bytes.size() >= kStreamPrefix) return;
    if (!started) {
      started = true;
      next_seq = seq;
    }
    if (seq != next_seq) return;  // retransmission or gap
    const std::size_t take = std::min(payload.size(), kStreamPrefix - bytes.size());
    bytes.insert(bytes.end(), payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(take));
    next_seq += static_cast<std::uint32_t>(payload.size());
  }
};

struct FlowState {
  ConnectionRecord record;
  DirectionBuffer a_to_b;
  DirectionBuffer b_to_a;
};

bool valid_unit(double v) { return v >= 0.0 && v <= 1.0; }

double secured_mix(double flag_fraction, double secured_fraction, const char* what) {
  if (!valid_unit(flag_fraction) || !valid_unit(secured_fraction))
    throw ValidationError(std::string(what) + " fractions must lie in [0,1]");
  if (secured_fraction > flag_fraction + 1e-12)
    throw ValidationError(std::string(what) + ": secured fraction exceeds TLS fraction");
  return 0.6 * flag_fraction + 0.4 * secured_fraction;
}

}  // namespace

CaptureIngest ingest_capture(std::span<const std::uint8_t> capture) {
  std::map<FlowKey, FlowState> flows;
  CaptureIngest out;
  const auto status = pcap::for_each_frame(capture, [&](const pcap::Frame& frame) {
    auto seg = pcap::decode(frame);
    if (!seg) return;
    Endpoint src{seg->src_ip, seg->src_port}, dst{seg->dst_ip, seg->dst_port};
    const bool forward = src <= dst;
    FlowKey key{forward ? src : dst, forward ? dst : src, seg->transport};
    auto& flow = flows[key];
    if (flow.record.packet_count == 0) {
      flow.record.endpoint_a = std::get<0>(key);
      flow.record.endpoint_b = std::get<1>(key);
      flow.record.transport = seg->transport;
    }
    flow.record.packet_count += 1;
    flow.record.byte_count += std::max<std::uint64_t>(frame.original_length, frame.data.size());
    if (seg->transport == pcap::Transport::tcp)
      (forward ? flow.a_to_b : flow.b_to_a).add(seg->tcp_seq, seg->payload);
  });
  out.truncated = status.truncated;
  out.warnings = status.warnings;
  if (status.truncated) out.warnings.push_back("capture truncated after " + std::to_string(status.frames) + " frames");

  out.records.reserve(flows.size());
  for (auto& [key, flow] : flows) {
    for (const auto* dir : {&flow.a_to_b, &flow.b_to_a}) {
      if (!tls::starts_with_hello(dir->bytes)) continue;
      flow.record.tls_observed = true;
      const auto hs = tls::scan_handshake(dir->bytes);
      if (hs.server_hello && hs.cipher_suite) flow.record.cipher_suite = hs.cipher_suite;
    }
    out.records.push_back(std::move(flow.record));
  }
  return out;
}

CaptureIngest ingest_capture_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open capture " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return ingest_capture(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

CaptureIngest ingest_capture_files(const std::vector<std::filesystem::path>& paths) {
  const long n = static_cast<long>(paths.size());
  std::vector<CaptureIngest> parts(paths.size());
  std::vector<std::exception_ptr> errors(paths.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      parts[idx] = ingest_capture_file(paths[idx]);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);  // first failing file, original type

  CaptureIngest out;
  std::vector<ConnectionRecord> all;
  for (auto& p : parts) {
    out.truncated = out.truncated || p.truncated;
    out.warnings.insert(out.warnings.end(), p.warnings.begin(), p.warnings.end());
    all.insert(all.end(), p.records.begin(), p.records.end());
  }
  out.records = merge_records(std::move(all));
  return out;
}

std::vector<ConnectionRecord> merge_records(std::vector<ConnectionRecord> records) {
  std::map<FlowKey, ConnectionRecord> merged;
  for (auto& r : records) {
    FlowKey key{r.endpoint_a, r.endpoint_b, r.transport};
    auto [it, inserted] = merged.try_emplace(key, r);
    if (inserted) continue;
    auto& m = it->second;
    m.byte_count += r.byte_count;
    m.packet_count += r.packet_count;
    m.tls_observed = m.tls_observed || r.tls_observed;
    if (!m.cipher_suite) m.cipher_suite = r.cipher_suite;
  }
  std::vector<ConnectionRecord> out;
  out.reserve(merged.size());
  for (auto& [k, r] : merged) out.push_back(std::move(r));
  return out;
}

double sigmoid(double x, std::vector<std::string>* warnings) {
  if (x < 0.0 || x > 100.0 || std::isnan(x)) {
    if (warnings) warnings->push_back("traffic share " + std::to_string(x) + " clamped to [0,100]");
    x = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 100.0);
  }
  return 1.0 / (1.0 + 100.0 * std::exp(-0.1 * x));
}

double ranking_reward(double sig, std::size_t rank, std::size_t connections) {
  if (rank < 1 || rank > connections)
    throw ValidationError("rank " + std::to_string(rank) + " outside 1.." + std::to_string(connections));
  const double r = 1.0 - static_cast<double>(rank) / static_cast<double>(connections);
  return sig + r - sig * r;
}

double availability(double share_percent, std::size_t rank, std::size_t connections) {
  const double sig = sigmoid(share_percent);
  return 0.6 * sig + 0.4 * ranking_reward(sig, rank, connections);
}

double confidentiality(double tls_fraction, double secured_fraction) {
  return secured_mix(tls_fraction, secured_fraction, "confidentiality");
}

double integrity(double tls_integrity_fraction, double secured_fraction) {
  return secured_mix(tls_integrity_fraction, secured_fraction, "integrity");
}

TrafficMetrics compute_metrics(std::span<const ConnectionRecord> records, const AddressMap& addresses,
                               const CipherSuitePolicy& policy, std::span<const NodeId> expected_assets) {
  TrafficMetrics out;
  if (records.empty()) {
    out.warnings.push_back("no connections observed; traffic metrics are zero");
    for (const auto& id : expected_assets) out.assets[id] = AssetTraffic{};
    return out;
  }

  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = records[x];
    const auto& b = records[y];
    if (a.byte_count != b.byte_count) return a.byte_count > b.byte_count;
    return std::tie(a.endpoint_a, a.endpoint_b, a.transport) < std::tie(b.endpoint_a, b.endpoint_b, b.transport);
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;

  struct Tally {
    std::uint64_t bytes = 0;
    std::size_t best_rank = 0;
    std::size_t count = 0;
    std::size_t tls = 0;
    std::size_t conf_secured = 0;
    std::size_t int_secured = 0;
  };
  std::map<NodeId, Tally> tallies;
  for (const auto& id : expected_assets) tallies[id];

  auto owner = [&](const std::string& ip) -> NodeId {
    auto it = addresses.find(ip);
    return it == addresses.end() ? NodeId(kUnattributed) : it->second;
  };

  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    total += r.byte_count;
    std::set<NodeId> touched{owner(r.endpoint_a.ip), owner(r.endpoint_b.ip)};
    for (const auto& asset : touched) {
      auto& t = tallies[asset];
      t.bytes += r.byte_count;
      t.best_rank = t.best_rank == 0 ? rank[i] : std::min(t.best_rank, rank[i]);
      t.count += 1;
      if (r.tls_observed) {
        t.tls += 1;
        if (r.cipher_suite && policy.secures_confidentiality(*r.cipher_suite)) t.conf_secured += 1;
        if (r.cipher_suite && policy.secures_integrity(*r.cipher_suite)) t.int_secured += 1;
      }
    }
  }

  for (const auto& [asset, t] : tallies) {
    AssetTraffic m;
    m.connections = n;
    m.asset_connections = t.count;
    m.bytes = t.bytes;
    m.traffic_share_percent = total == 0 ? 0.0 : 100.0 * static_cast<double>(t.bytes) / static_cast<double>(total);
    m.rank = t.count == 0 ? n : t.best_rank;
    m.avail = availability(m.traffic_share_percent, m.rank, n);
    if (t.count > 0) {
      const double c = static_cast<double>(t.count);
      const double tls = static_cast<double>(t.tls) / c;
      m.conf = confidentiality(tls, static_cast<double>(t.conf_secured) / c);
      m.integ = integrity(tls, static_cast<double>(t.int_secured) / c);
    }
    m.tbs = (m.avail + m.conf + m.integ) / 3.0;
    out.assets.emplace(asset, m);
  }
  return out;
}

}  // namespace kct
