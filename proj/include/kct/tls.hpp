#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "kct/cipher_suites.hpp"

namespace kct::tls {

inline constexpr std::uint8_t kContentChangeCipherSpec = 20;
inline constexpr std::uint8_t kContentHandshake = 22;
inline constexpr std::uint8_t kHandshakeClientHello = 1;
inline constexpr std::uint8_t kHandshakeServerHello = 2;

struct HandshakeSummary {
  bool client_hello = false;
  bool server_hello = false;
  std::optional<CipherSuiteId> cipher_suite;  // negotiated, from the server hello
  std::uint16_t version = 0;                  // negotiated, 0x0304 for TLS 1.3
};

/// True when `stream` begins with a TLS handshake record header carrying a
/// client or server hello. Port-agnostic detection.
bool starts_with_hello(std::span<const std::uint8_t> stream);

/// Reassembles handshake messages from the complete records at the head of
/// one direction of a connection and reports the hellos found.
HandshakeSummary scan_handshake(std::span<const std::uint8_t> stream);

}  // namespace kct::tls
