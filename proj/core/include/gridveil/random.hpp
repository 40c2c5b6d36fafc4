#pragma once

#include <cstdint>
#include <random>

#include <gmpxx.h>

namespace gridveil {

/// Seeded random source shared by key generation, blinding, secret sampling
/// and coefficient draws. One instance per agent keeps runs reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ULL) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  /// Uniform integer with exactly `bits` random bits (top bit not forced).
  mpz_class random_bits(unsigned bits);

  /// Uniform integer in [0, bound).
  mpz_class below(const mpz_class& bound);

  /// Derives an independent child stream, e.g. one per agent.
  Rng split(std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(engine_() >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    std::mt19937_64 child(seq);
    return Rng(child());
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gridveil
