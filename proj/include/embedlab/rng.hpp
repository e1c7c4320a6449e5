#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace embedlab {

// Counter-based deterministic random stream.
//
// Output i is a pure function of (key, i), where the key is folded from a
// seed plus optional stream-identifying words. Two streams built from the
// same words produce identical sequences on every platform and under any
// thread schedule, which is what makes parallel experiments bit-reproducible:
// each unit of work derives its own stream from (seed, work-id) and never
// shares generator state.
//
// std::uniform_real_distribution and friends are deliberately avoided; the
// standard leaves their output unspecified across implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kGamma)) {}

  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> words)
      : RngStream(seed) {
    for (std::uint64_t w : words) absorb(w);
  }

  // Extends the key with another identifying word (e.g. a trial index).
  void absorb(std::uint64_t w) {
    key_ = mix(key_ ^ (w + kGamma + (key_ << 6) + (key_ >> 2)));
  }

  std::uint64_t next_u64() { return mix(key_ + ++counter_ * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired value is cached, so draws
  // come two at a time from the underlying counter.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), u1 < 1
    double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr double kPi = 3.14159265358979323846;

  // splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace embedlab
