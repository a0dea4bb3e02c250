#pragma once

#include <cstdint>

namespace replica_lab {

// splitmix64 (Steele/Lea/Flood). Chosen because every draw consumes exactly
// one 64-bit state step: no rejection loops, so a consumer that documents
// "w words per item" is platform-stable and seekable by construction.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound). One word. Multiply-high mapping; the
  // modulo bias is below bound/2^64, far below anything observable here.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  // Uniform double in (0, 1]. One word. Never returns 0, so -log(unit())
  // is always finite.
  double unit() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  bool coin() { return (next() >> 63) != 0; }

private:
  std::uint64_t state_;
};

// Deterministic per-sample stream: sample j under master seed s draws from
// SplitMix64(derive_stream_seed(s, j)). Mixing both words through the
// splitmix finalizer keeps streams decorrelated for adjacent j.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (0xA0761D6478BD642Full + index * 0xE7037ED1A0B428DBull));
  g.next();
  return g.next();
}

}  // namespace replica_lab
