#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace grouplearn {

// Counter-based generator: each output is a hash of (key, counter), so a
// stream's draws depend only on its (master seed, stream id) and never on
// how many other streams exist.
class AgentRng {
 public:
  AgentRng(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_(mix(mix(master_seed) ^ mix(stream_id ^ 0xa5a5a5a5a5a5a5a5ULL))) {}

  std::uint64_t next_u64() {
    return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; uses two uniforms per draw
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson by Knuth's product method; large means are split using the
  // additivity of independent Poisson counts, keeping the draw exact
  long next_poisson(double mean) {
    if (!(mean > 0.0)) throw std::domain_error("poisson mean must be positive");
    long total = 0;
    while (mean > 30.0) {
      total += poisson_knuth(30.0);
      mean -= 30.0;
    }
    return total + poisson_knuth(mean);
  }

 private:
  long poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_double();
    } while (p > limit);
    return k - 1;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace grouplearn
