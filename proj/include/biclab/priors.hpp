#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "biclab/geometry.hpp"
#include "biclab/history.hpp"
#include "biclab/rng.hpp"

namespace biclab {

enum class ObsKind { noiseless, gaussian, bernoulli_sign };

/// Reward channel for the linear model. bernoulli_sign emits ±1 with mean
/// <l, A> (clipped to [-1, 1]).
struct ObsModel {
  ObsKind kind = ObsKind::gaussian;
  double sigma = 1.0;

  double draw(double mean, Stream& rng) const;
  json to_json() const;
  static ObsModel from_json(const json& j);
};

class LinearPrior {
 public:
  enum class Kind { gaussian, uniform };

  /// Centered Gaussian; the covariance must be symmetric positive definite.
  static LinearPrior gaussian(Mat covariance);
  /// Uniform on scale * body.
  static LinearPrior uniform(const ConvexBody& body, double scale = 1.0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Mat& covariance() const { return covariance_; }
  const Mat& cholesky() const { return cholesky_; }
  const ConvexBody& body() const { return body_; }
  double scale() const { return scale_; }

  json to_json() const;
  static LinearPrior from_json(const json& j);

 private:
  Kind kind_ = Kind::gaussian;
  int dim_ = 0;
  Mat covariance_, cholesky_;
  ConvexBody body_;
  double scale_ = 1.0;
};

struct SamplerOptions {
  int burn_in_per_dim = 50;
  int thin_per_dim = 1;
  std::uint64_t max_rejections = 10'000'000;
  /// Rejection sampling is used up to this dimension, hit-and-run above.
  int rejection_max_dim = 4;
};

Vec sample_uniform(const ConvexBody& body, Stream& rng, const SamplerOptions& options = {});
Vec sample_prior(const LinearPrior& prior, Stream& rng, const SamplerOptions& options = {});

struct GaussianPosterior {
  Vec mean;
  Mat covariance;
  Mat factor;  // covariance = factor * factor'
};

/// Uniform on K ∩ { l : rows * l = values }, parametrized as center + basis * u.
struct SlicePosterior {
  ConvexBody body;
  Mat rows;
  Vec values;
  Vec center;  // a relative-interior point of the slice
  Mat basis;   // orthonormal basis of the null space of rows
  bool ball_exact = false;  // body is a ball: slice is a ball around center
  double slice_radius = 0.0;
};

/// N(mean, covariance) restricted to a body.
struct TruncatedGaussianPosterior {
  ConvexBody body;
  Vec mean;
  Mat covariance;
  Mat factor;
  Mat precision;
  /// Lower bound of ½(x - mean)' precision (x - mean) over the body.
  double quad_floor = 0.0;
};

struct CloudPosterior {
  std::vector<Vec> particles;
  std::vector<double> weights;  // normalized
  double ess = 0.0;
  bool low_ess = false;  // ESS below 100
};

using PosteriorState = std::variant<GaussianPosterior, SlicePosterior, TruncatedGaussianPosterior, CloudPosterior>;

struct ConditionOptions {
  std::size_t particles = 100000;
  SamplerOptions sampler;
};

/// Exact posterior where the (prior, observation) pair admits one, otherwise
/// self-normalized importance sampling with the prior as proposal.
PosteriorState condition(const LinearPrior& prior, const SpectralHistory& history, const ObsModel& obs, Stream& rng,
                         const ConditionOptions& options = {});

Vec posterior_sample(const PosteriorState& state, Stream& rng, const SamplerOptions& options = {});

/// Repeated draws from one posterior without per-draw allocation for the
/// Gaussian representation. A truncated Gaussian on a ball or box is drawn by
/// rejection from either the Gaussian or the uniform law on the body,
/// whichever accepted more often in a short pilot on the first draw.
class PosteriorSampler {
 public:
  explicit PosteriorSampler(const PosteriorState& state, SamplerOptions options = {});
  void draw(Stream& rng, Vec& out);

 private:
  bool gaussian_proposal(const TruncatedGaussianPosterior& t, Stream& rng, Vec& out);
  bool uniform_proposal(const TruncatedGaussianPosterior& t, Stream& rng, Vec& out);

  const PosteriorState* state_;
  SamplerOptions options_;
  Vec z_;
  int mode_ = -1;  // truncated Gaussian proposal: 0 Gaussian, 1 uniform
};

/// True when posterior_mean() is exact for the representation itself. A
/// particle cloud counts as exact: its weighted mean is computed, not sampled.
bool has_exact_mean(const PosteriorState& state);

/// Exact where available; otherwise the average of `draws` posterior samples.
Vec posterior_mean(const PosteriorState& state, Stream& rng, std::size_t draws = 2000);

/// Pseudo-inverse based conditioning of N(mean, cov) on rows * x = values.
GaussianPosterior condition_gaussian_exact(const Vec& mean, const Mat& covariance, const Mat& rows, const Vec& values);

/// Symmetric PSD square root factor (negative eigenvalues clamped to 0).
Mat psd_factor(const Mat& covariance);

// Posterior contraction harness ------------------------------------------

struct ScalarModel {
  enum class Kind { beta_bernoulli, gaussian, noiseless };
  Kind kind = Kind::beta_bernoulli;
  double a = 1.0, b = 1.0;      // Beta prior
  double prior_sd = 1.0;        // centered Gaussian prior
  double noise_sd = 1.0;
  int samples = 100;
};

struct ContractionResult {
  double epsilon = 0.0;
  double delta = 0.0;
  double frequency = 0.0;
  double ci_halfwidth = 0.0;
  double hypothesis_max = 0.0;  // worst grid estimate of P[|θ - ξ| >= ε | ξ]
  bool hypothesis_holds = false;
  bool passes = false;
  std::size_t replications = 0;
};

/// Hoeffding radius sqrt(log(2/δ) / (2n)) for means of [0,1] variables.
double hoeffding_epsilon(int samples, double delta);

ContractionResult contraction_harness(const ScalarModel& model, double epsilon, double delta, std::size_t replications,
                                      std::uint64_t seed, unsigned jobs = 0);

/// max over directions v and t ∈ {±0.5, ±1, ±2}/σ̂ of sqrt(2 log Ê[e^{tX}] / t²),
/// X = <sample, v>.
double subgaussian_norm_estimate(const std::vector<Vec>& samples, const std::vector<Vec>& directions);
double subgaussian_norm_estimate(std::span<const double> samples);

struct TailCheck {
  double delta = 0.0;
  double estimate = 0.0;    // Ê[|X 1_E|] with E the upper δ-tail
  double exact = 0.0;       // φ(Φ^{-1}(1-δ))
  double bound = 0.0;       // 3 δ sqrt(log 1/δ)
  bool passes = false;
};

TailCheck subgaussian_tail_check(double delta, std::size_t samples, std::uint64_t seed);

// Semibandit atoms ----------------------------------------------------------

struct BetaAtom {
  double a = 1.0;
  double b = 1.0;
  double mean() const { return a / (a + b); }
  double variance() const { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }
};

struct AssumptionReport {
  double tau = 0.0;
  double sigma2 = 0.0;
  double alpha = 0.0;
  bool tail_holds = false;  // P[θ < x] >= exp(-x^{-α}) on x = 0.01, ..., 1
  double worst_tail_slack = 0.0;
};

class AtomPrior {
 public:
  AtomPrior() = default;
  AtomPrior(std::vector<BetaAtom> atoms, double alpha);

  std::size_t size() const { return atoms_.size(); }
  const BetaAtom& operator[](std::size_t i) const { return atoms_[i]; }
  const std::vector<BetaAtom>& atoms() const { return atoms_; }
  double alpha() const { return alpha_; }
  double tau() const;
  double sigma2() const;

  AssumptionReport check() const;

 private:
  std::vector<BetaAtom> atoms_;
  double alpha_ = 1.0;
};

}  // namespace biclab
