#pragma once

#include <cstdint>
#include <string_view>

namespace groundrl {

/// Counter-based splittable generator.
///
/// A stream is identified by a 64-bit key; draws are a keyed hash of an
/// incrementing counter, so a stream's output never depends on how many
/// other streams were consumed. `split(purpose, index)` derives an
/// independent child key, which is how every random decision in the
/// library is addressed: (seed, purpose, index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::string_view purpose, std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace groundrl
