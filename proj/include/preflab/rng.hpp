#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace preflab {

/// Named purposes for independent random streams. Each consumer of randomness
/// draws from its own stream so that, e.g., extending a dataset never shifts
/// the labels of earlier triples.
enum class Stream : std::uint64_t {
  kContexts = 1,
  kPairs = 2,
  kLabels = 3,
  kMinibatch = 4,
  kOnline = 5,
  kInstance = 6,
  kSubset = 7,
  kEvaluation = 8,
};

/// Counter-based 64-bit generator.
///
/// Draw i of stream s under seed k is splitmix64(key(k, s) + i * 0x9E3779B97F4A7C15),
/// where key mixes the seed and the stream id through splitmix64 as well. The
/// output is a pure function of (seed, stream, counter), so streams never
/// interact and results are identical across platforms and runs.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, Stream stream);
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// Index drawn from an unnormalized nonnegative weight vector by inverse CDF.
  int categorical(std::span<const double> weights);
  /// Standard exponential variate.
  double exponential();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace preflab
