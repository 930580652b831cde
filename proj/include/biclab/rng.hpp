#pragma once

#include <cstdint>
#include <span>

namespace biclab {

/// Counter-based random stream. Output k of a stream is a pure function of
/// (key, k), so replications seeded by derive_stream() are reproducible no
/// matter which worker thread runs them.
///
/// Distributions are implemented here rather than taken from <random>
/// because libstdc++/libc++ disagree on the algorithms behind
/// std::normal_distribution and friends.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key = 0) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p);
  int binomial(int n, double p);
  std::uint64_t below(std::uint64_t n);
  /// Index drawn proportionally to `weights` (need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  /// Child stream; children of distinct indices are distinct streams.
  Stream split(std::uint64_t index) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

/// Stream for replication `index` of an experiment with the given seed.
Stream derive_stream(std::uint64_t seed, std::uint64_t index);

}  // namespace biclab
