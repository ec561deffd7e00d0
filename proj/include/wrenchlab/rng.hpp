#pragma once

#include <wrenchlab/common.hpp>

#include <cmath>
#include <cstdint>

namespace wrenchlab {

/* Counter-based generator: draw k of stream (key) is a pure function of
 * (key, k), in the style of splittable stateless RNGs.  The mixer is the
 * SplitMix64 finalizer.  Streams split by deriving a new key from (key, i);
 * results are independent of how work is divided between threads.
 * Integer-only state, so sequences are identical across platforms. */
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x9e3779b97f4a7c15ull, stream)), counter_(0) {}

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /* Independent substream i of this stream. */
  CounterRng substream(std::uint64_t i) const {
    CounterRng r(0);
    r.key_ = mix(key_, i + 0x517cc1b727220a95ull);
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_, counter_++); }

  /* Uniform in [0, 1): top 53 bits. */
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /* Standard normal via Box-Muller; consumes two uniforms per call. */
  double gaussian() {
    double u1 = uniform(), u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  int uniform_int(int n) { // in [0, n)
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  Vec3 gaussian_vec3() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = gaussian();
    return v;
  }

  VecX gaussian_vec(int n) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /* Uniform direction on the unit sphere in R^3. */
  Vec3 unit_vec3() {
    for (;;) {
      Vec3 v = gaussian_vec3();
      double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace wrenchlab
