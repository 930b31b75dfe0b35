#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kct {

/// 64-bit FNV-1a. Used for content fingerprints (mission hash, config hash,
/// store hash), not for anything security related.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// fnv1a64 rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view data);

}  // namespace kct
