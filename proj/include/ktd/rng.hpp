#pragma once

#include <cstdint>

namespace ktd {

/// Deterministic counter-seeded generator (xoshiro256**).
///
/// Every stochastic routine takes an `Rng&` explicitly. Independent streams
/// are obtained with `split(streamId)`, which hashes the parent seed with the
/// stream id, so results depend only on (seed, stream path) and never on the
/// order in which workers run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Derived generator for an independent stream.
  [[nodiscard]] Rng split(std::uint64_t streamId) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace ktd
