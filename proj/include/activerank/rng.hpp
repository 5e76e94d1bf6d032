#pragma once

#include <cstdint>

namespace activerank {

// Counter-based randomness: every draw is a pure function of (seed, stream,
// counter). Results never depend on call order, so a query answered late or
// replayed from a log sees the same bits as one answered immediately.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in [0, bound) via multiply-shift.
inline std::uint64_t to_range(std::uint64_t bits, std::uint64_t bound) noexcept {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(bits) * bound) >> 64);
}

// Named streams keep the engine's opponent draws and an oracle's outcome
// draws independent even when both are seeded identically.
namespace stream {
inline constexpr std::uint64_t kOpponent = 0x6f70706f6e656e74ULL;
inline constexpr std::uint64_t kOutcome = 0x6f7574636f6d6521ULL;
inline constexpr std::uint64_t kTrial = 0x747269616c736565ULL;
inline constexpr std::uint64_t kPassive = 0x7061737369766521ULL;
}  // namespace stream

// Seed for trial `index` of an experiment with master seed `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t index) noexcept {
  return mix(master, stream::kTrial, index);
}

}  // namespace activerank
