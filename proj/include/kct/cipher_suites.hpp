#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace kct {

using CipherSuiteId = std::uint16_t;

/// IANA name of a registered cipher suite, or std::nullopt.
std::optional<std::string_view> cipher_suite_name(CipherSuiteId id);
/// Accepts an IANA name ("TLS_AES_128_GCM_SHA256") or a hex code ("0x1301").
/// Throws ParseError when neither form resolves.
CipherSuiteId parse_cipher_suite(std::string_view text);
/// "0x1301" style rendering.
std::string cipher_suite_hex(CipherSuiteId id);

/// Which negotiated suites count as confidentiality- and integrity-secured.
struct CipherSuitePolicy {
  std::set<CipherSuiteId> confidentiality_secured;
  std::set<CipherSuiteId> integrity_secured;

  /// AEAD suites (GCM, CCM, ChaCha20-Poly1305) secure both properties;
  /// CBC suites with an HMAC secure integrity only; NULL, export-grade,
  /// anonymous and RC4 suites secure neither.
  static CipherSuitePolicy defaults();
  /// JSON document with `confidentiality_secured` and `integrity_secured`
  /// arrays of suite identifiers.
  static CipherSuitePolicy from_json_text(std::string_view text);
  static CipherSuitePolicy from_file(const std::filesystem::path& path);

  bool secures_confidentiality(CipherSuiteId id) const { return confidentiality_secured.count(id) > 0; }
  bool secures_integrity(CipherSuiteId id) const { return integrity_secured.count(id) > 0; }
};

}  // namespace kct
