#pragma once

#include <cstdint>
#include <random>

namespace acdcflow::rng {

// Sub-stream derivation contract (stable across releases): a master seed is
// combined with a fixed purpose salt and a stream index through two rounds of
// the SplitMix64 finalizer. Every consumer that needs an independent stream
// (one Monte Carlo sample, one Nataf group, ...) derives its own 64-bit seed
// this way, so results never depend on how work is partitioned over threads.

inline constexpr std::uint64_t kSaltMcsSample = 0x6d63735f73616d70ULL;
inline constexpr std::uint64_t kSaltPlfGroup = 0x706c665f67726f75ULL;
inline constexpr std::uint64_t kSaltGeneric = 0x67656e6572696373ULL;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t salt, std::uint64_t index);

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}
  Stream(std::uint64_t master, std::uint64_t salt, std::uint64_t index)
      : eng_(substream_seed(master, salt, index)) {}

  // Uniform on the open interval (0,1); 53 mantissa bits, never exactly 0 or 1.
  double uniform01();
  // Standard normal via the inverse CDF, so the draw count per call is fixed
  // and results are identical on every platform with the same mt19937_64.
  double normal01();

 private:
  std::mt19937_64 eng_;
};

// Inverse standard normal CDF and related helpers (double precision).
// The quantile clamps p away from 0 and 1 so saturated tail probabilities
// return large finite values instead of throwing.
double normal_quantile(double p);
double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace acdcflow::rng
