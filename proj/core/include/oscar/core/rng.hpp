#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace oscar {

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Avalanching combination of two 64-bit values (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept;

/// Derives an independent stream seed from a base seed and a list of
/// identifiers, e.g. (world seed, scene id, prefix hash).
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> ids) noexcept;

/// Seeded random stream. Uses boost::random so that sequences are identical
/// on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return boost::random::uniform_01<double>{}(engine_); }

  /// Uniform in the open interval (0, 1).
  double uniform_open();

  double normal(double mean, double stddev) {
    return boost::random::normal_distribution<double>{mean, stddev}(engine_);
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return boost::random::uniform_int_distribution<std::int64_t>{lo, hi}(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard Gumbel sample.
  double gumbel();

  std::uint64_t next() { return engine_(); }

 private:
  boost::random::mt19937_64 engine_;
};

}  // namespace oscar
