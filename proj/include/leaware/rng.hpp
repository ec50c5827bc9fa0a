#pragma once

#include <cstdint>
#include <random>

namespace leaware {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and an index.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(parent) ^ (index * 0xD1B54A32D192ED03ULL + 0x5851F42D4C957F2DULL));
}

/// Labeled sub-streams of one master seed. Offsets are fixed so changing
/// one component's consumption never shifts another component's draws.
enum class SeedStream : std::uint64_t {
  data = 1,
  init = 2,
  perturbation = 3,
  augmentation = 4,
  batching = 5,
  subsample = 6,
  targets = 7,
};

constexpr std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) noexcept {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

}  // namespace leaware
