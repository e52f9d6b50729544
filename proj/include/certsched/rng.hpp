#pragma once

#include <cmath>
#include <cstdint>

namespace certsched {

// Stateless counter-mode generator.  Every draw is a pure function of the
// root seed plus a small tuple of stream coordinates (trial, subsystem,
// cycle, entity, ...), so two policies replaying the same trial observe
// identical noise regardless of what they decide to schedule, and results
// do not depend on evaluation order.
class CounterRng {
 public:
  // Subsystem stream tags.  Keep values stable: they are part of what makes
  // a seed reproduce byte-identical runs.
  enum Stream : std::uint64_t {
    kShadowing = 1,
    kFading = 2,
    kProcessNoise = 3,
    kMeasurementNoise = 4,
    kGust = 5,
    kChain = 6,
    kScenario = 7,
    kSynthetic = 8,
    kBurst = 9,
  };

  explicit CounterRng(std::uint64_t root_seed) : seed_(root_seed) {}

  std::uint64_t root_seed() const { return seed_; }

  template <class... Key>
  std::uint64_t bits(Key... key) const {
    std::uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc909ull);
    ((h = mix(h + static_cast<std::uint64_t>(key))), ...);
    return h;
  }

  // Uniform on the open interval (0, 1); never returns an endpoint, so it is
  // safe to feed through log().
  template <class... Key>
  double uniform(Key... key) const {
    return (static_cast<double>(bits(key...) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two decorrelated sub-draws.
  template <class... Key>
  double normal(Key... key) const {
    const double u1 = uniform(key..., std::uint64_t{0x9e37});
    const double u2 = uniform(key..., std::uint64_t{0x79b9});
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Unit-mean exponential (Rayleigh channel power gain).
  template <class... Key>
  double exponential(Key... key) const {
    return -std::log(uniform(key...));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace certsched
