#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fusedrive {

/// Derives an independent stream seed from a master seed and a label
/// (FNV-1a over the label, mixed with the seed through splitmix64).
std::uint64_t rng_split(std::uint64_t master_seed, std::string_view stream_label);

/// Portable random source: mt19937_64 is fully specified by the standard, and
/// the float conversions below are hand-rolled so streams are bit-identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fusedrive
