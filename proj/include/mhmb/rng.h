#pragma once

#include <cstdint>
#include <random>

namespace mhmb {

// Random stream used throughout the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniforms are built from the top 53 bits so they lie strictly
// inside (0, 1); normals come from std::normal_distribution and are therefore
// reproducible for a given standard library build.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  Engine& engine() { return engine_; }

  // Child stream for chain / trial `index`. Seeds are derived with
  // derive_seed, so children of equal parents are equal.
  Rng split(std::uint64_t index) const { return Rng(derive_seed(seed_hint(), index)); }

  // SplitMix64 finalizer over (master, index).
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_hint() const {
    Engine copy = engine_;
    return copy();
  }

  Engine engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace mhmb
