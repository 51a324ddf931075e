#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace arq {

/// 64-bit FNV-1a; stable across platforms and processes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Lowercase, zero-padded, 16 hex digits.
std::string hex64(std::uint64_t v);

}  // namespace arq
