#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace layerlens {

// splitmix64 finalizer; used to spread seeds before feeding them to the engine.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic PRNG used wherever the library needs randomness.
//
// The engine is std::mt19937_64, whose output sequence is fully specified by
// the C++ standard, so an identical seed yields an identical draw sequence on
// every platform. The uniform and Gaussian transforms are implemented here
// rather than via std::*_distribution, whose sequences are
// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; draws two uniforms, caches the spare.
  double gaussian();

  // Uniform integer in [0, n). Plain modulo reduction: the bias is 2^-64 * n,
  // irrelevant at the sizes used here.
  std::uint64_t uniform_int(std::uint64_t n);

  // Deterministic in-place Fisher-Yates (std::shuffle is not portable).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Child stream for parallel jobs: seed XOR splitmix64 hash of the stream
  // index. Independent jobs must each own their child instance.
  SeededRng child(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable seed derivation from a parent seed, a purpose tag and an index.
// Same inputs give the same derived seed everywhere.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0);

}  // namespace layerlens
