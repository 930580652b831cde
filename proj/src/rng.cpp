#include "biclab/rng.hpp"

#include <cmath>
#include <numbers>

#include "biclab/errors.hpp"

namespace biclab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::infeasible_geometry: return "infeasible-geometry";
    case ErrorCode::degenerate_geometry: return "degenerate-geometry";
    case ErrorCode::contradiction: return "contradiction";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::iteration_limit: return "iteration-limit";
    case ErrorCode::solver_error: return "solver-error";
    case ErrorCode::precondition_violation: return "precondition-violation";
    case ErrorCode::lift_undefined: return "lift-undefined";
  }
  return "unknown";
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Stream::result_type Stream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Stream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Stream::uniform_open() {
  return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

double Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

// Marsaglia & Tsang; shape < 1 handled by the usual power boost.
double Stream::gamma(double shape) {
  if (!(shape > 0.0)) throw Error(ErrorCode::invalid_input, "gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Stream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

bool Stream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

int Stream::binomial(int n, double p) {
  int successes = 0;
  for (int i = 0; i < n; ++i) successes += bernoulli(p) ? 1 : 0;
  return successes;
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_input, "below(0)");
  // Lemire's multiply-shift with rejection keeps the draw unbiased.
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

std::size_t Stream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_input, "categorical weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u == total; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

Stream Stream::split(std::uint64_t index) const {
  return Stream(mix64(mix64(key_ ^ kGolden) + mix64(index + 0x632BE59BD9B4E019ULL)));
}

Stream derive_stream(std::uint64_t seed, std::uint64_t index) {
  return Stream(mix64(mix64(seed) ^ mix64(index * kGolden + 0xD1B54A32D192ED03ULL)));
}

}  // namespace biclab
