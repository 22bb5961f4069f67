#pragma once

#include "ncpd/tensor.hpp"

#include <cstdint>
#include <random>

namespace ncpd {

/// SplitMix64 finalizer; used to turn (seed, stream) pairs into engine seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seedable, splittable generator. The engine is std::mt19937_64 (fully
/// specified by the standard) seeded with splitmix64(seed). Distributions are
/// computed here rather than through <random> distribution objects, whose
/// output is implementation defined:
///   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
///   normal()   = Box-Muller, cos branch, u1 taken from (0, 1]
///   index(n)   = floor(uniform() * n)
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Index index(Index n);

  Vector uniform_vector(Index n);
  Vector normal_vector(Index n);

  /// Independent generator for substream `stream`; does not advance *this.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ncpd
