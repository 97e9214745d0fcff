#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace csn {

// SplitMix64 finalizer, used for seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s);

// Named sub-stream seeds. Draws from one stream never perturb another:
// each stream's seed depends only on the master seed and the name (and
// optional index), not on how many values other streams consumed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index);

// Uniform draws layered over mt19937_64. The mapping from raw engine output
// to bounded values is implemented here so results do not depend on the
// standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Real in [0, 1) with 53 random bits.
  double uniform_real();

  // Index drawn according to `probs` (nonnegative, summing to ~1).
  // Zero-probability entries are never returned.
  int categorical(const std::vector<double>& probs);

 private:
  std::mt19937_64 engine_;
};

}  // namespace csn
