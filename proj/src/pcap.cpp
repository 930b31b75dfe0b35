#include "kct/pcap.hpp"

#include <arpa/inet.h>

#include <cstring>

#include "kct/error.hpp"

namespace kct::pcap {

namespace {

constexpr std::uint32_t kPcapMagicUs = 0xa1b2c3d4u;
constexpr std::uint32_t kPcapMagicNs = 0xa1b23c4du;
constexpr std::uint32_t kNgSectionHeader = 0x0a0d0d0au;
constexpr std::uint32_t kNgInterface = 0x00000001u;
constexpr std::uint32_t kNgObsoletePacket = 0x00000002u;
constexpr std::uint32_t kNgSimplePacket = 0x00000003u;
constexpr std::uint32_t kNgEnhancedPacket = 0x00000006u;
constexpr std::uint32_t kNgByteOrderMagic = 0x1a2b3c4du;

class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, bool big_endian) : bytes_(bytes), big_(big_endian) {}

  std::uint16_t u16(std::size_t off) const {
    const auto* p = bytes_.data() + off;
    return big_ ? static_cast<std::uint16_t>(p[0] << 8 | p[1]) : static_cast<std::uint16_t>(p[1] << 8 | p[0]);
  }
  std::uint32_t u32(std::size_t off) const {
    const auto* p = bytes_.data() + off;
    return big_ ? (std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | p[3])
                : (std::uint32_t{p[3]} << 24 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[1]} << 8 | p[0]);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool big_;
};

std::uint32_t le32(std::span<const std::uint8_t> b) { return Cursor(b, false).u32(0); }

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }
std::uint32_t be32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | p[3];
}

ReadStatus read_classic(std::span<const std::uint8_t> cap, const std::function<void(const Frame&)>& visit) {
  ReadStatus st;
  if (cap.size() < 24) throw ParseError("pcap header truncated");
  const std::uint32_t raw = le32(cap);
  bool big = false, nanos = false;
  if (raw == kPcapMagicUs) {
  } else if (raw == kPcapMagicNs) {
    nanos = true;
  } else if (raw == __builtin_bswap32(kPcapMagicUs)) {
    big = true;
  } else if (raw == __builtin_bswap32(kPcapMagicNs)) {
    big = nanos = true;
  } else {
    throw ParseError("not a pcap or pcapng capture");
  }
  Cursor hdr(cap, big);
  const std::uint32_t link = hdr.u32(20) & 0x0fffffffu;
  std::size_t off = 24;
  while (off < cap.size()) {
    if (cap.size() - off < 16) {
      st.truncated = true;
      break;
    }
    Cursor rec(cap.subspan(off), big);
    const std::uint64_t sec = rec.u32(0), frac = rec.u32(4);
    const std::uint32_t incl = rec.u32(8), orig = rec.u32(12);
    if (cap.size() - off - 16 < incl) {
      st.truncated = true;
      break;
    }
    Frame f;
    f.link_type = link;
    f.timestamp_ns = sec * 1'000'000'000ULL + (nanos ? frac : frac * 1000ULL);
    f.original_length = orig;
    f.data = cap.subspan(off + 16, incl);
    visit(f);
    ++st.frames;
    off += 16 + incl;
  }
  return st;
}

ReadStatus read_ng(std::span<const std::uint8_t> cap, const std::function<void(const Frame&)>& visit) {
  ReadStatus st;
  struct Interface {
    std::uint32_t link;
    std::uint32_t snaplen;
    std::uint64_t units_per_sec;
  };
  std::vector<Interface> ifaces;
  bool big = false;
  std::size_t off = 0;

  auto timestamp = [&](std::uint32_t iface, std::uint32_t hi, std::uint32_t lo) -> std::uint64_t {
    const std::uint64_t ticks = std::uint64_t{hi} << 32 | lo;
    const std::uint64_t per = iface < ifaces.size() ? ifaces[iface].units_per_sec : 1'000'000ULL;
    if (per == 0) return ticks;
    if (per >= 1'000'000'000ULL) return ticks / (per / 1'000'000'000ULL);
    return ticks * (1'000'000'000ULL / per);
  };
  auto emit = [&](std::uint32_t iface, std::uint64_t ts, std::uint32_t orig, std::span<const std::uint8_t> data) {
    if (iface >= ifaces.size()) {
      st.warnings.push_back("packet references undeclared interface " + std::to_string(iface));
      return;
    }
    Frame f;
    f.link_type = ifaces[iface].link;
    f.timestamp_ns = ts;
    f.original_length = orig;
    f.data = data;
    visit(f);
    ++st.frames;
  };

  while (off < cap.size()) {
    if (cap.size() - off < 12) {
      st.truncated = true;
      break;
    }
    const auto rest = cap.subspan(off);
    const std::uint32_t type = le32(rest);  // palindromic for the section header
    if (type == kNgSectionHeader) {
      const std::uint32_t bom = le32(rest.subspan(8));
      if (bom == kNgByteOrderMagic)
        big = false;
      else if (bom == __builtin_bswap32(kNgByteOrderMagic))
        big = true;
      else
        throw ParseError("pcapng section header has a bad byte-order magic");
      ifaces.clear();
    } else if (off == 0) {
      throw ParseError("not a pcap or pcapng capture");
    }
    Cursor blk(rest, big);
    const std::uint32_t btype = blk.u32(0);
    const std::uint32_t len = blk.u32(4);
    if (len < 12 || len % 4 != 0) throw ParseError("pcapng block with invalid length " + std::to_string(len));
    if (rest.size() < len) {
      st.truncated = true;
      break;
    }
    const auto body = rest.subspan(8, len - 12);
    Cursor b(body, big);
    switch (btype) {
      case kNgInterface: {
        if (body.size() < 8) throw ParseError("pcapng interface block too short");
        Interface ifc{b.u16(0), b.u32(4), 1'000'000ULL};
        // Options: look for if_tsresol (code 9).
        std::size_t o = 8;
        while (o + 4 <= body.size()) {
          const std::uint16_t code = b.u16(o), olen = b.u16(o + 2);
          if (code == 0) break;
          if (o + 4 + olen > body.size()) break;
          if (code == 9 && olen >= 1) {
            const std::uint8_t r = body[o + 4];
            std::uint64_t per = 1;
            const unsigned exp = r & 0x7f;
            for (unsigned i = 0; i < exp && per < (1ULL << 62); ++i) per *= (r & 0x80) ? 2 : 10;
            ifc.units_per_sec = per;
          }
          o += 4 + ((olen + 3u) & ~3u);
        }
        ifaces.push_back(ifc);
        break;
      }
      case kNgEnhancedPacket: {
        if (body.size() < 20) throw ParseError("pcapng enhanced packet block too short");
        const std::uint32_t iface = b.u32(0), caplen = b.u32(12), orig = b.u32(16);
        if (caplen > body.size() - 20) throw ParseError("pcapng packet overruns its block");
        emit(iface, timestamp(iface, b.u32(4), b.u32(8)), orig, body.subspan(20, caplen));
        break;
      }
      case kNgObsoletePacket: {
        if (body.size() < 20) throw ParseError("pcapng packet block too short");
        const std::uint32_t iface = b.u16(0), caplen = b.u32(12), orig = b.u32(16);
        if (caplen > body.size() - 20) throw ParseError("pcapng packet overruns its block");
        emit(iface, timestamp(iface, b.u32(4), b.u32(8)), orig, body.subspan(20, caplen));
        break;
      }
      case kNgSimplePacket: {
        if (body.size() < 4) throw ParseError("pcapng simple packet block too short");
        const std::uint32_t orig = b.u32(0);
        std::uint32_t caplen = static_cast<std::uint32_t>(body.size() - 4);
        if (orig < caplen) caplen = orig;
        if (!ifaces.empty() && ifaces[0].snaplen != 0 && ifaces[0].snaplen < caplen) caplen = ifaces[0].snaplen;
        emit(0, 0, orig, body.subspan(4, caplen));
        break;
      }
      default:
        break;  // statistics, name resolution, custom blocks
    }
    off += len;
  }
  return st;
}

std::string ip_text(int family, const std::uint8_t* addr) {
  char buf[INET6_ADDRSTRLEN];
  if (!inet_ntop(family, addr, buf, sizeof buf)) return {};
  return buf;
}

std::optional<Segment> decode_transport(std::uint8_t proto, const std::uint8_t* p, std::size_t len, Segment seg) {
  if (proto == 6) {
    if (len < 20) return std::nullopt;
    const std::size_t hl = static_cast<std::size_t>(p[12] >> 4) * 4;
    if (hl < 20 || hl > len) return std::nullopt;
    seg.transport = Transport::tcp;
    seg.src_port = be16(p);
    seg.dst_port = be16(p + 2);
    seg.tcp_seq = be32(p + 4);
    seg.tcp_flags = p[13];
    seg.payload = {p + hl, len - hl};
    return seg;
  }
  if (proto == 17) {
    if (len < 8) return std::nullopt;
    seg.transport = Transport::udp;
    seg.src_port = be16(p);
    seg.dst_port = be16(p + 2);
    seg.payload = {p + 8, len - 8};
    return seg;
  }
  return std::nullopt;
}

std::optional<Segment> decode_ip(const std::uint8_t* p, std::size_t len) {
  if (len < 1) return std::nullopt;
  const int version = p[0] >> 4;
  if (version == 4) {
    if (len < 20) return std::nullopt;
    const std::size_t ihl = static_cast<std::size_t>(p[0] & 0x0f) * 4;
    std::size_t total = be16(p + 2);
    if (ihl < 20 || total < ihl) return std::nullopt;
    if (total > len) total = len;  // snapped capture
    if ((be16(p + 6) & 0x1fff) != 0) return std::nullopt;  // non-first fragment
    Segment seg;
    seg.src_ip = ip_text(AF_INET, p + 12);
    seg.dst_ip = ip_text(AF_INET, p + 16);
    return decode_transport(p[9], p + ihl, total - ihl, std::move(seg));
  }
  if (version == 6) {
    if (len < 40) return std::nullopt;
    std::size_t total = 40 + be16(p + 4);
    if (total > len) total = len;
    Segment seg;
    seg.src_ip = ip_text(AF_INET6, p + 8);
    seg.dst_ip = ip_text(AF_INET6, p + 24);
    std::uint8_t next = p[6];
    std::size_t off = 40;
    for (int hops = 0; hops < 8; ++hops) {
      if (next == 0 || next == 43 || next == 60) {
        if (off + 8 > total) return std::nullopt;
        const std::uint8_t nh = p[off];
        off += (static_cast<std::size_t>(p[off + 1]) + 1) * 8;
        next = nh;
      } else if (next == 44) {
        if (off + 8 > total) return std::nullopt;
        if ((be16(p + off + 2) & 0xfff8) != 0) return std::nullopt;
        next = p[off];
        off += 8;
      } else {
        break;
      }
    }
    if (off > total) return std::nullopt;
    return decode_transport(next, p + off, total - off, std::move(seg));
  }
  return std::nullopt;
}

}  // namespace

ReadStatus for_each_frame(std::span<const std::uint8_t> capture, const std::function<void(const Frame&)>& visit) {
  if (capture.empty()) return {};
  if (capture.size() < 4) throw ParseError("capture too short to identify");
  if (le32(capture) == kNgSectionHeader) return read_ng(capture, visit);
  return read_classic(capture, visit);
}

std::optional<Segment> decode(const Frame& frame) {
  const std::uint8_t* p = frame.data.data();
  std::size_t len = frame.data.size();
  switch (frame.link_type) {
    case kLinkEthernet: {
      if (len < 14) return std::nullopt;
      std::uint16_t ethertype = be16(p + 12);
      std::size_t off = 14;
      while ((ethertype == 0x8100 || ethertype == 0x88a8) && off + 4 <= len) {
        ethertype = be16(p + off + 2);
        off += 4;
      }
      if (ethertype != 0x0800 && ethertype != 0x86dd) return std::nullopt;
      return decode_ip(p + off, len - off);
    }
    case kLinkLinuxSll:
      if (len < 16) return std::nullopt;
      return decode_ip(p + 16, len - 16);
    case kLinkLinuxSll2:
      if (len < 20) return std::nullopt;
      return decode_ip(p + 20, len - 20);
    case kLinkNull:
      if (len < 4) return std::nullopt;
      return decode_ip(p + 4, len - 4);
    case kLinkRaw:
    case kLinkIpv4:
    case kLinkIpv6:
      return decode_ip(p, len);
    default:
      return std::nullopt;
  }
}

}  // namespace kct::pcap
