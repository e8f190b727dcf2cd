#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pchaos {

using Rng = std::mt19937_64;

// Stream derivation: every random stream is a function of (seed, purpose tag,
// worker index) only. The tag is hashed with 64-bit FNV-1a, and the three words
// are mixed with splitmix64 before seeding a mt19937_64.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);
Rng derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t worker);

}  // namespace pchaos
