#pragma once

#include <cstdint>
#include <random>

namespace icqr {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby integer seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent sub-stream of `base` identified by `stream`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(base ^ mix_seed(stream * 0xD1B54A32D192ED03ull + 1));
}

// Stream tags used when one seed fans out to several pipeline stages.
namespace streams {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t network = 2;
inline constexpr std::uint64_t importance = 3;
inline constexpr std::uint64_t clustering = 4;
inline constexpr std::uint64_t synthetic = 5;
}  // namespace streams

}  // namespace icqr
