#include "acdcflow/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

namespace acdcflow::rng {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t salt, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ salt) + index);
}

double Stream::uniform01() {
  const std::uint64_t bits = eng_() >> 11;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Stream::normal01() { return normal_quantile(uniform01()); }

double normal_quantile(double p) {
  // Probabilities that round to 0 or 1 in double map to the finite quantile of
  // the nearest representable interior probability instead of overflowing.
  constexpr double lo = 0x1.0p-53;
  p = std::clamp(p, lo, 1.0 - lo);
  // Phi^-1(p) = -sqrt(2) * erfc_inv(2p)
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

}  // namespace acdcflow::rng
