#pragma once

#include <cstdint>
#include <random>

#include "dtof/units.hpp"

// All randomness flows through this wrapper. std::mt19937_64 is fully
// specified by the standard, and the samplers below are implemented by hand
// (std::*_distribution is implementation-defined), so streams are bit-exact
// across platforms and toolchains. Manifests record the algorithm as
// "mt19937_64/splitmix64-derive/v1".

namespace dtof {

// splitmix64 finalizer (Steele et al., public domain reference constants).
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-stream seed: golden-ratio stride over the index, then the splitmix64
// finalizer. Streams (master, 0), (master, 1), ... are decorrelated.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64_mix(master_seed + 0x9e3779b97f4a7c15ull * (index + 1));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  // Exponential inter-arrival time with the given rate (events per unit time).
  double exponential(double rate) {
    if (!(rate > 0.0)) throw DomainError("Rng::exponential: rate must be > 0");
    return -std::log(uniform_pos()) / rate;
  }

  // Standard normal via Box-Muller; the pair partner is cached so draw
  // parity is part of the documented stream state.
  double gaussian();

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n);

private:
  std::mt19937_64 eng_;
  bool has_cached_gauss_ = false;
  double cached_gauss_ = 0.0;
};

} // namespace dtof
