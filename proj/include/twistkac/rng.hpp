#ifndef TWISTKAC_RNG_HPP
#define TWISTKAC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "twistkac/common.hpp"

namespace twistkac {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream: the state is a pure function of
/// (master seed, stream id, draw counter), so sample i always sees the
/// same numbers no matter which worker produced it.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream)
      : state_(splitmix64_mix(master_seed + 0x9e3779b97f4a7c15ULL) ^
               splitmix64_mix(stream ^ 0xd1b54a32d192ed03ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform in (0, 1].
  double next_uniform_oc() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform in [0, 1).
  double next_uniform_co() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Pair of independent standard normals (Box-Muller).
  void next_normal_pair(double& g1, double& g2) {
    const double u1 = next_uniform_oc();
    const double u2 = next_uniform_co();
    const double r = std::sqrt(-2.0 * std::log(u1));
    g1 = r * std::cos(two_pi * u2);
    g2 = r * std::sin(two_pi * u2);
  }

  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double g1, g2;
    next_normal_pair(g1, g2);
    cached_ = g2;
    have_cached_ = true;
    return g1;
  }

  /// Circularly symmetric complex normal with E|z|^2 = 1.
  cplx next_complex_normal() {
    double g1, g2;
    next_normal_pair(g1, g2);
    return cplx(g1, g2) * std::numbers::sqrt2 * 0.5;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace twistkac

#endif
