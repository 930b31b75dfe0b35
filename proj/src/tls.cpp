#include "kct/tls.hpp"

#include <vector>

namespace kct::tls {

namespace {

constexpr std::size_t kRecordHeader = 5;
constexpr std::size_t kMaxRecord = (1u << 14) + 2048;
constexpr std::uint16_t kExtSupportedVersions = 43;

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }
std::uint32_t be24(const std::uint8_t* p) { return std::uint32_t{p[0]} << 16 | std::uint32_t{p[1]} << 8 | p[2]; }

bool plausible_header(const std::uint8_t* p) {
  return p[0] >= 20 && p[0] <= 24 && p[1] == 3 && p[2] <= 4 && be16(p + 3) <= kMaxRecord;
}

void parse_server_hello(std::span<const std::uint8_t> body, HandshakeSummary& out) {
  // legacy_version(2) random(32) session_id<0..32> cipher_suite(2) compression(1) extensions<..>
  if (body.size() < 35) return;
  std::size_t off = 34;
  const std::size_t sid = body[off];
  off += 1 + sid;
  if (off + 3 > body.size()) return;
  out.server_hello = true;
  out.version = be16(body.data());
  out.cipher_suite = be16(body.data() + off);
  off += 3;
  if (off + 2 > body.size()) return;
  const std::size_t ext_end = off + 2 + be16(body.data() + off);
  off += 2;
  while (off + 4 <= body.size() && off + 4 <= ext_end) {
    const std::uint16_t type = be16(body.data() + off);
    const std::uint16_t len = be16(body.data() + off + 2);
    off += 4;
    if (off + len > body.size()) return;
    if (type == kExtSupportedVersions && len == 2) out.version = be16(body.data() + off);
    off += len;
  }
}

}  // namespace

bool starts_with_hello(std::span<const std::uint8_t> stream) {
  if (stream.size() < kRecordHeader + 1) return false;
  if (!plausible_header(stream.data()) || stream[0] != kContentHandshake) return false;
  const std::uint8_t msg = stream[kRecordHeader];
  return msg == kHandshakeClientHello || msg == kHandshakeServerHello;
}

HandshakeSummary scan_handshake(std::span<const std::uint8_t> stream) {
  HandshakeSummary out;
  std::vector<std::uint8_t> hs;
  std::size_t off = 0;
  while (stream.size() - off >= kRecordHeader) {
    const std::uint8_t* h = stream.data() + off;
    if (!plausible_header(h)) break;
    const std::size_t len = be16(h + 3);
    if (stream.size() - off - kRecordHeader < len) break;
    if (h[0] == kContentChangeCipherSpec) break;  // later handshake records are encrypted
    if (h[0] == kContentHandshake) hs.insert(hs.end(), h + kRecordHeader, h + kRecordHeader + len);
    off += kRecordHeader + len;
  }

  std::size_t pos = 0;
  while (hs.size() - pos >= 4) {
    const std::uint8_t type = hs[pos];
    const std::size_t len = be24(hs.data() + pos + 1);
    if (hs.size() - pos - 4 < len) break;
    const std::span<const std::uint8_t> body(hs.data() + pos + 4, len);
    if (type == kHandshakeClientHello) {
      out.client_hello = true;
    } else if (type == kHandshakeServerHello) {
      parse_server_hello(body, out);
    }
    pos += 4 + len;
  }
  return out;
}

}  // namespace kct::tls
