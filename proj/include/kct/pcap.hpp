#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kct::pcap {

// Link-layer header types (tcpdump LINKTYPE_* values).
inline constexpr std::uint32_t kLinkNull = 0;
inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRaw = 101;
inline constexpr std::uint32_t kLinkLinuxSll = 113;
inline constexpr std::uint32_t kLinkIpv4 = 228;
inline constexpr std::uint32_t kLinkIpv6 = 229;
inline constexpr std::uint32_t kLinkLinuxSll2 = 276;

struct Frame {
  std::uint32_t link_type = kLinkEthernet;
  std::uint64_t timestamp_ns = 0;
  std::uint32_t original_length = 0;
  std::span<const std::uint8_t> data;  // captured bytes
};

struct ReadStatus {
  std::size_t frames = 0;
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// Walks every frame of a pcap or pcapng image. Throws ParseError when the
/// file header is not recognised; a stream that ends mid-record stops the
/// walk and sets `truncated`.
ReadStatus for_each_frame(std::span<const std::uint8_t> capture, const std::function<void(const Frame&)>& visit);

enum class Transport : std::uint8_t { tcp = 6, udp = 17 };

/// Transport-level view of one frame.
struct Segment {
  std::string src_ip;
  std::string dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Transport transport = Transport::tcp;
  std::uint32_t tcp_seq = 0;
  std::uint8_t tcp_flags = 0;
  std::span<const std::uint8_t> payload;
};

inline constexpr std::uint8_t kTcpSyn = 0x02;

/// Decodes Ethernet (with 802.1Q/802.1ad tags), Linux cooked, BSD loopback
/// and raw IP frames down to TCP/UDP. Returns std::nullopt for anything else
/// (ARP, ICMP, IP fragments after the first).
std::optional<Segment> decode(const Frame& frame);

}  // namespace kct::pcap
