#pragma once

#include <cstdint>

namespace fld {

// Independent streams derived from one global seed. Each stage draws its own
// sub-seed as splitmix64(global + stream * 0x9E3779B97F4A7C15), so changing
// one stage's consumption never perturbs another stage.
enum class SeedStream : std::uint64_t {
  CalibrationSplit = 1,
  Batching = 2,
  Synthetic = 3,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t global, SeedStream stream) {
  return splitmix64(global + static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace fld
