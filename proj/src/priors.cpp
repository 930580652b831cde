#include "biclab/priors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>

#include "biclab/errors.hpp"
#include "biclab/lp.hpp"
#include "biclab/parallel.hpp"
#include "biclab/stats.hpp"

namespace biclab {

double ObsModel::draw(double mean, Stream& rng) const {
  switch (kind) {
    case ObsKind::noiseless: return mean;
    case ObsKind::gaussian: return mean + sigma * rng.normal();
    case ObsKind::bernoulli_sign: {
      const double m = std::clamp(mean, -1.0, 1.0);
      return rng.bernoulli(0.5 * (1.0 + m)) ? 1.0 : -1.0;
    }
  }
  return mean;
}

json ObsModel::to_json() const {
  switch (kind) {
    case ObsKind::noiseless: return json{{"kind", "noiseless"}};
    case ObsKind::gaussian: return json{{"kind", "gaussian"}, {"sigma", sigma}};
    case ObsKind::bernoulli_sign: return json{{"kind", "bernoulli-sign"}};
  }
  return json{};
}

ObsModel ObsModel::from_json(const json& j) {
  ObsModel m;
  const std::string kind = j.value("kind", "gaussian");
  if (kind == "noiseless") m.kind = ObsKind::noiseless;
  else if (kind == "gaussian") m.kind = ObsKind::gaussian;
  else if (kind == "bernoulli-sign") m.kind = ObsKind::bernoulli_sign;
  else throw Error(ErrorCode::invalid_input, "unknown observation kind \"" + kind + "\"");
  m.sigma = j.value("sigma", 1.0);
  if (m.kind == ObsKind::gaussian && !(m.sigma > 0.0)) throw Error(ErrorCode::invalid_input, "noise sigma must be positive");
  return m;
}

LinearPrior LinearPrior::gaussian(Mat covariance) {
  if (covariance.rows() == 0 || covariance.rows() != covariance.cols())
    throw Error(ErrorCode::invalid_input, "covariance must be square and non-empty");
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::invalid_input, "covariance must be symmetric");
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success || min_eigenvalue(covariance) <= 0.0)
    throw Error(ErrorCode::invalid_input, "covariance must be positive definite");
  LinearPrior p;
  p.kind_ = Kind::gaussian;
  p.dim_ = static_cast<int>(covariance.rows());
  p.cholesky_ = llt.matrixL();
  p.covariance_ = std::move(covariance);
  return p;
}

LinearPrior LinearPrior::uniform(const ConvexBody& body, double scale) {
  LinearPrior p;
  p.kind_ = Kind::uniform;
  p.dim_ = body.dim();
  p.scale_ = scale;
  p.body_ = scale == 1.0 ? body : body.scaled(scale);
  return p;
}

json LinearPrior::to_json() const {
  if (kind_ == Kind::gaussian) return json{{"kind", "gaussian"}, {"covariance", biclab::to_json(covariance_)}};
  return json{{"kind", "uniform"}, {"body", body_.to_json()}};
}

LinearPrior LinearPrior::from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    if (j.contains("covariance")) return gaussian(matrix_from_json(j.at("covariance")));
    return gaussian(Mat::Identity(j.at("dim").get<int>(), j.at("dim").get<int>()));
  }
  if (kind == "uniform") return uniform(ConvexBody::from_json(j.at("body")), j.value("scale", 1.0));
  throw Error(ErrorCode::invalid_input, "unknown prior kind \"" + kind + "\"");
}

namespace {

Vec unit_direction(int dim, Stream& rng) {
  for (;;) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

// Uniform point of the m-ball of the given radius.
Vec uniform_in_ball(int m, double radius, Stream& rng) {
  const Vec dir = unit_direction(m, rng);
  return dir * (radius * std::pow(rng.uniform(), 1.0 / m));
}

// Hit-and-run over { start + basis * u } ∩ body.
Vec hit_and_run(const ConvexBody& body, const Vec& start, const Mat& basis, int steps, Stream& rng) {
  Vec x = start;
  const int m = static_cast<int>(basis.cols());
  for (int s = 0; s < steps; ++s) {
    const Vec dir = basis * unit_direction(m, rng);
    const auto [lo, hi] = body.chord(x, dir);
    x += rng.uniform(lo, hi) * dir;
  }
  return x;
}

// Polyhedral description of a box or half-space body.
std::pair<Mat, Vec> polyhedral_form(const ConvexBody& body) {
  if (body.kind() == ConvexBody::Kind::half_spaces) return {body.rows(), body.offsets()};
  const int d = body.dim();
  Mat rows(2 * d, d);
  rows << Mat::Identity(d, d), -Mat::Identity(d, d);
  Vec off(2 * d);
  off << body.upper(), -body.lower();
  return {rows, off};
}

}  // namespace

Vec sample_uniform(const ConvexBody& body, Stream& rng, const SamplerOptions& options) {
  const int d = body.dim();
  switch (body.kind()) {
    case ConvexBody::Kind::ball: return uniform_in_ball(d, body.radius(), rng);
    case ConvexBody::Kind::box: {
      Vec x(d);
      for (int i = 0; i < d; ++i) x[i] = rng.uniform(body.lower()[i], body.upper()[i]);
      return x;
    }
    case ConvexBody::Kind::half_spaces: break;
  }
  if (d <= options.rejection_max_dim) {
    const double radius = body.bounding_radius();
    for (std::uint64_t attempt = 0; attempt < options.max_rejections; ++attempt) {
      Vec x = uniform_in_ball(d, radius, rng);
      if (body.contains(x)) return x;
    }
    throw Error(ErrorCode::degenerate_geometry, "rejection acceptance below 1e-6; use hit-and-run");
  }
  const int steps = options.burn_in_per_dim * d + options.thin_per_dim * d;
  return hit_and_run(body, Vec::Zero(d), Mat::Identity(d, d), steps, rng);
}

Vec sample_prior(const LinearPrior& prior, Stream& rng, const SamplerOptions& options) {
  if (prior.kind() == LinearPrior::Kind::gaussian) {
    Vec z(prior.dim());
    for (int i = 0; i < prior.dim(); ++i) z[i] = rng.normal();
    return prior.cholesky() * z;
  }
  return sample_uniform(prior.body(), rng, options);
}

Mat psd_factor(const Mat& covariance) {
  Eigen::SelfAdjointEigenSolver<Mat> es(covariance);
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

GaussianPosterior condition_gaussian_exact(const Vec& mean, const Mat& covariance, const Mat& rows, const Vec& values) {
  const Mat cross = covariance * rows.transpose();
  const Mat inner = rows * cross;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(inner);
  cod.setThreshold(1e-12);
  const Vec innovation = values - rows * mean;
  GaussianPosterior g;
  g.mean = mean + cross * cod.solve(innovation);
  const double residual = (rows * g.mean - values).norm();
  if (residual > 1e-9 * (1.0 + values.norm()))
    throw Error(ErrorCode::contradiction, "noiseless observations are inconsistent");
  g.covariance = covariance - cross * cod.solve(cross.transpose());
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  g.factor = psd_factor(g.covariance);
  return g;
}

namespace {

SlicePosterior make_slice(const ConvexBody& body, const Mat& rows, const Vec& values) {
  const int d = body.dim();
  SlicePosterior s;
  s.body = body;
  s.rows = rows;
  s.values = values;
  Vec x0 = Vec::Zero(d);
  if (rows.rows() == 0) {
    s.basis = Mat::Identity(d, d);
  } else {
    Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const int rank = static_cast<int>(svd.rank());
    x0 = svd.solve(values);
    if ((rows * x0 - values).norm() > 1e-9 * (1.0 + values.norm()))
      throw Error(ErrorCode::contradiction, "noiseless observations are inconsistent");
    s.basis = svd.matrixV().rightCols(d - rank);
  }

  if (body.kind() == ConvexBody::Kind::ball) {
    const double r2 = body.radius() * body.radius() - x0.squaredNorm();
    if (r2 < -1e-12) throw Error(ErrorCode::contradiction, "observations place the parameter outside the body");
    s.center = x0;
    s.ball_exact = true;
    s.slice_radius = std::sqrt(std::max(0.0, r2));
    return s;
  }

  // Deepest point of the slice: maximize the uniform slack s subject to
  // rows_k x + s |rows_k| <= off_k, rows x = values, 0 <= s <= 1.
  const auto [prows, poff] = polyhedral_form(body);
  const auto m = prows.rows();
  const auto k = rows.rows();
  LinearProgram lp;
  lp.objective = Vec::Zero(d + 1);
  lp.objective[d] = 1.0;
  lp.rows = Mat::Zero(m + k + 2, d + 1);
  lp.rhs = Vec::Zero(m + k + 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    lp.rows.row(i).head(d) = prows.row(i);
    lp.rows(i, d) = prows.row(i).norm();
    lp.rhs[i] = poff[i];
    lp.senses.push_back(RowSense::less_equal);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    lp.rows.row(m + i).head(d) = rows.row(i);
    lp.rhs[m + i] = values[i];
    lp.senses.push_back(RowSense::equal);
  }
  lp.rows(m + k, d) = 1.0;
  lp.rhs[m + k] = 1.0;
  lp.senses.push_back(RowSense::less_equal);
  lp.rows(m + k + 1, d) = -1.0;
  lp.senses.push_back(RowSense::less_equal);
  const LpResult r = solve_lp_free(lp);
  if (r.status == LpStatus::infeasible)
    throw Error(ErrorCode::contradiction, "observations place the parameter outside the body");
  if (r.status != LpStatus::optimal) throw Error(ErrorCode::solver_error, "slice feasibility LP failed");
  s.center = r.x.head(d);
  return s;
}

Vec sample_slice(const SlicePosterior& s, Stream& rng, const SamplerOptions& options) {
  const int m = static_cast<int>(s.basis.cols());
  if (m == 0) return s.center;
  if (s.rows.rows() == 0) return sample_uniform(s.body, rng, options);
  if (s.ball_exact) return s.center + s.basis * uniform_in_ball(m, s.slice_radius, rng);
  if (m <= options.rejection_max_dim) {
    // The slice lies in the ball of the bounding radius around the projection
    // of the origin onto the affine subspace.
    const Vec foot = s.center - s.basis * (s.basis.transpose() * s.center);
    const double r2 = std::pow(s.body.bounding_radius(), 2) - foot.squaredNorm();
    const double radius = std::sqrt(std::max(0.0, r2));
    for (std::uint64_t attempt = 0; attempt < options.max_rejections; ++attempt) {
      Vec x = foot + s.basis * uniform_in_ball(m, radius, rng);
      if (s.body.contains(x, 1e-12)) return x;
    }
    throw Error(ErrorCode::degenerate_geometry, "slice rejection acceptance below 1e-6");
  }
  const int steps = options.burn_in_per_dim * m + options.thin_per_dim * m;
  return hit_and_run(s.body, s.center, s.basis, steps, rng);
}

double log_likelihood(const ObsModel& obs, const SpectralHistory& h, const Vec& l) {
  double ll = 0.0;
  for (const auto& step : h.steps()) {
    const double mean = step.action.dot(l);
    if (obs.kind == ObsKind::gaussian) {
      const double z = (step.reward - mean) / obs.sigma;
      ll -= 0.5 * z * z;
    } else {
      const double p = 0.5 * (1.0 + step.reward * std::clamp(mean, -1.0, 1.0));
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += std::log(p);
    }
  }
  return ll;
}

CloudPosterior importance_cloud(const LinearPrior& prior, const SpectralHistory& h, const ObsModel& obs, Stream& rng,
                                const ConditionOptions& options) {
  CloudPosterior c;
  c.particles.reserve(options.particles);
  std::vector<double> logw;
  logw.reserve(options.particles);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < options.particles; ++k) {
    c.particles.push_back(sample_prior(prior, rng, options.sampler));
    logw.push_back(log_likelihood(obs, h, c.particles.back()));
    top = std::max(top, logw.back());
  }
  if (!std::isfinite(top)) throw Error(ErrorCode::contradiction, "no particle is consistent with the observations");
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  double sq = 0.0;
  c.weights.resize(logw.size());
  for (std::size_t k = 0; k < logw.size(); ++k) {
    c.weights[k] = logw[k] / total;
    sq += c.weights[k] * c.weights[k];
  }
  c.ess = 1.0 / sq;
  c.low_ess = c.ess < 100.0;
  return c;
}

}  // namespace

PosteriorState condition(const LinearPrior& prior, const SpectralHistory& history, const ObsModel& obs, Stream& rng,
                         const ConditionOptions& options) {
  const int d = prior.dim();
  if (history.dim() != d && !history.empty()) throw Error(ErrorCode::invalid_input, "history dimension mismatch");
  const bool gaussian_prior = prior.kind() == LinearPrior::Kind::gaussian;

  if (history.empty()) {
    if (gaussian_prior) return GaussianPosterior{Vec::Zero(d), prior.covariance(), prior.cholesky()};
    return make_slice(prior.body(), Mat::Zero(0, d), Vec::Zero(0));
  }
  const Mat X = history.design();
  const Vec y = history.rewards();

  if (obs.kind == ObsKind::noiseless) {
    if (gaussian_prior) return condition_gaussian_exact(Vec::Zero(d), prior.covariance(), X, y);
    return make_slice(prior.body(), X, y);
  }
  if (obs.kind == ObsKind::gaussian) {
    const double s2 = obs.sigma * obs.sigma;
    if (gaussian_prior) {
      const Mat precision = prior.covariance().inverse() + X.transpose() * X / s2;
      GaussianPosterior g;
      g.covariance = precision.inverse();
      g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
      g.mean = g.covariance * (X.transpose() * y) / s2;
      g.factor = psd_factor(g.covariance);
      return g;
    }
    if (history.gamma() > 1e-12) {
      TruncatedGaussianPosterior t;
      t.body = prior.body();
      const Mat gram_inv = history.gram().inverse();
      t.covariance = s2 * 0.5 * (gram_inv + gram_inv.transpose());
      t.mean = gram_inv * (X.transpose() * y);
      Eigen::LLT<Mat> llt(t.covariance);
      t.factor = llt.matrixL();
      t.precision = history.gram() / s2;
      double dist = 0.0;
      if (t.body.kind() == ConvexBody::Kind::ball) {
        dist = std::max(0.0, t.mean.norm() - t.body.radius());
      } else if (t.body.kind() == ConvexBody::Kind::box) {
        dist = (t.mean - t.mean.cwiseMax(t.body.lower()).cwiseMin(t.body.upper())).norm();
      }
      t.quad_floor = 0.5 * std::max(0.0, min_eigenvalue(t.precision)) * dist * dist;
      return t;
    }
  }
  return importance_cloud(prior, history, obs, rng, options);
}

Vec posterior_sample(const PosteriorState& state, Stream& rng, const SamplerOptions& options) {
  return std::visit(
      [&](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianPosterior>) {
          Vec z(s.factor.cols());
          for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
          return s.mean + s.factor * z;
        } else if constexpr (std::is_same_v<T, SlicePosterior>) {
          return sample_slice(s, rng, options);
        } else if constexpr (std::is_same_v<T, TruncatedGaussianPosterior>) {
          Vec z(s.factor.cols());
          for (std::uint64_t attempt = 0; attempt < options.max_rejections; ++attempt) {
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
            Vec x = s.mean + s.factor * z;
            if (s.body.contains(x)) return x;
          }
          throw Error(ErrorCode::degenerate_geometry, "truncated Gaussian acceptance below 1e-6");
        } else {
          return s.particles[rng.categorical(s.weights)];
        }
      },
      state);
}

PosteriorSampler::PosteriorSampler(const PosteriorState& state, SamplerOptions options)
    : state_(&state), options_(options) {
  if (const auto* g = std::get_if<GaussianPosterior>(&state)) z_.resize(g->factor.cols());
  if (const auto* t = std::get_if<TruncatedGaussianPosterior>(&state)) z_.resize(t->factor.cols());
}

void PosteriorSampler::draw(Stream& rng, Vec& out) {
  if (const auto* g = std::get_if<GaussianPosterior>(state_)) {
    for (Eigen::Index i = 0; i < z_.size(); ++i) z_[i] = rng.normal();
    out.noalias() = g->mean + g->factor * z_;
    return;
  }
  if (const auto* t = std::get_if<TruncatedGaussianPosterior>(state_)) {
    if (mode_ < 0) {
      mode_ = 0;
      if (t->body.kind() != ConvexBody::Kind::half_spaces) {
        // Rounds of 64 + 64 until either proposal has accepted something.
        constexpr int kPilot = 64;
        int gauss = 0, unif = 0;
        for (int round = 0; round < 4096 && gauss + unif == 0; ++round) {
          for (int k = 0; k < kPilot; ++k) gauss += gaussian_proposal(*t, rng, out) ? 1 : 0;
          for (int k = 0; k < kPilot; ++k) unif += uniform_proposal(*t, rng, out) ? 1 : 0;
        }
        mode_ = unif > gauss ? 1 : 0;
      }
    }
    for (std::uint64_t attempt = 0; attempt < options_.max_rejections; ++attempt)
      if (mode_ == 0 ? gaussian_proposal(*t, rng, out) : uniform_proposal(*t, rng, out)) return;
    throw Error(ErrorCode::degenerate_geometry, "truncated Gaussian acceptance below 1e-6");
  }
  out = posterior_sample(*state_, rng, options_);
}

bool PosteriorSampler::gaussian_proposal(const TruncatedGaussianPosterior& t, Stream& rng, Vec& out) {
  for (Eigen::Index i = 0; i < z_.size(); ++i) z_[i] = rng.normal();
  out.noalias() = t.mean + t.factor * z_;
  return t.body.contains(out);
}

bool PosteriorSampler::uniform_proposal(const TruncatedGaussianPosterior& t, Stream& rng, Vec& out) {
  out = sample_uniform(t.body, rng, options_);
  z_.noalias() = out - t.mean;
  const double half_quad = 0.5 * z_.dot(t.precision * z_);
  return rng.uniform() < std::exp(t.quad_floor - half_quad);
}

bool has_exact_mean(const PosteriorState& state) {
  if (std::holds_alternative<GaussianPosterior>(state) || std::holds_alternative<CloudPosterior>(state)) return true;
  if (const auto* s = std::get_if<SlicePosterior>(&state)) return s->ball_exact || s->basis.cols() == 0;
  return false;
}

Vec posterior_mean(const PosteriorState& state, Stream& rng, std::size_t draws) {
  if (const auto* g = std::get_if<GaussianPosterior>(&state)) return g->mean;
  if (const auto* s = std::get_if<SlicePosterior>(&state); s && (s->ball_exact || s->basis.cols() == 0)) return s->center;
  if (const auto* c = std::get_if<CloudPosterior>(&state)) {
    Vec m = Vec::Zero(c->particles.front().size());
    for (std::size_t k = 0; k < c->particles.size(); ++k) m += c->weights[k] * c->particles[k];
    return m;
  }
  Vec m;
  for (std::size_t k = 0; k < draws; ++k) {
    const Vec x = posterior_sample(state, rng);
    if (k == 0) m = Vec::Zero(x.size());
    m += x;
  }
  return m / static_cast<double>(draws);
}

double hoeffding_epsilon(int samples, double delta) {
  if (samples < 1 || !(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_input, "need n >= 1 and δ in (0,1)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * samples));
}

namespace {

struct ScalarDraw {
  double estimate;   // θ(γ)
  double posterior;  // ξ̂ drawn from the posterior given γ
};

ScalarDraw observe(const ScalarModel& m, double xi, Stream& rng, bool need_posterior) {
  switch (m.kind) {
    case ScalarModel::Kind::noiseless: return {xi, xi};
    case ScalarModel::Kind::beta_bernoulli: {
      const int k = rng.binomial(m.samples, xi);
      const double post = need_posterior ? rng.beta(m.a + k, m.b + m.samples - k) : 0.0;
      return {static_cast<double>(k) / m.samples, post};
    }
    case ScalarModel::Kind::gaussian: {
      double sum = 0.0;
      for (int i = 0; i < m.samples; ++i) sum += xi + m.noise_sd * rng.normal();
      const double s2 = m.noise_sd * m.noise_sd;
      const double precision = 1.0 / (m.prior_sd * m.prior_sd) + m.samples / s2;
      const double mean = (sum / s2) / precision;
      const double post = need_posterior ? mean + rng.normal() / std::sqrt(precision) : 0.0;
      return {sum / m.samples, post};
    }
  }
  return {xi, xi};
}

double draw_xi(const ScalarModel& m, Stream& rng) {
  switch (m.kind) {
    case ScalarModel::Kind::beta_bernoulli: return rng.beta(m.a, m.b);
    case ScalarModel::Kind::gaussian:
    case ScalarModel::Kind::noiseless: return m.prior_sd * rng.normal();
  }
  return 0.0;
}

}  // namespace

ContractionResult contraction_harness(const ScalarModel& model, double epsilon, double delta, std::size_t replications,
                                      std::uint64_t seed, unsigned jobs) {
  if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || replications < 2)
    throw Error(ErrorCode::invalid_input, "harness needs ε > 0, δ in (0,1) and at least two replications");
  ContractionResult out;
  out.epsilon = epsilon;
  out.delta = delta;
  out.replications = replications;

  std::vector<double> grid;
  if (model.kind == ScalarModel::Kind::beta_bernoulli) {
    for (int k = 0; k <= 20; ++k) grid.push_back(k / 20.0);
  } else {
    for (int k = -6; k <= 6; ++k) grid.push_back(0.5 * k * model.prior_sd);
  }
  constexpr std::size_t kGridReps = 20000;
  const double slack = 3.0 * std::sqrt(delta * (1.0 - delta) / kGridReps);
  out.hypothesis_holds = true;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double xi = grid[g];
    const Moments hits = replicate(mix64(seed ^ 0x68797074ULL) + g, kGridReps, jobs, Moments{},
                                   [&](std::size_t, Stream& rng, Moments& acc) {
                                     acc.add(std::abs(observe(model, xi, rng, false).estimate - xi) >= epsilon ? 1.0 : 0.0);
                                   });
    out.hypothesis_max = std::max(out.hypothesis_max, hits.mean());
    if (hits.mean() > delta + slack) out.hypothesis_holds = false;
  }
  if (!out.hypothesis_holds)
    throw Error(ErrorCode::precondition_violation,
                "estimator violates the concentration hypothesis (worst grid frequency " + format_double(out.hypothesis_max) + ")");

  const Moments tail = replicate(seed, replications, jobs, Moments{}, [&](std::size_t, Stream& rng, Moments& acc) {
    const double xi = draw_xi(model, rng);
    acc.add(std::abs(observe(model, xi, rng, true).posterior - xi) >= 2.0 * epsilon ? 1.0 : 0.0);
  });
  out.frequency = tail.mean();
  out.ci_halfwidth = two_sided_z(0.99) * std::sqrt(std::max(tail.variance(), 0.0) / tail.count);
  out.passes = out.frequency <= 2.0 * delta + out.ci_halfwidth;
  return out;
}

double subgaussian_norm_estimate(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::invalid_input, "no samples");
  Moments m;
  for (double x : samples) m.add(x);
  const double sd = std::sqrt(m.variance());
  if (!(sd > 0.0)) return 0.0;
  double best = 0.0;
  for (double t0 : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
    const double t = t0 / sd;
    // log-mean-exp with a shift for stability
    double top = -std::numeric_limits<double>::infinity();
    for (double x : samples) top = std::max(top, t * x);
    double acc = 0.0;
    for (double x : samples) acc += std::exp(t * x - top);
    const double log_mgf = top + std::log(acc / static_cast<double>(samples.size()));
    best = std::max(best, std::sqrt(std::max(0.0, 2.0 * log_mgf / (t * t))));
  }
  return best;
}

double subgaussian_norm_estimate(const std::vector<Vec>& samples, const std::vector<Vec>& directions) {
  if (directions.empty()) throw Error(ErrorCode::invalid_input, "empty direction list");
  if (samples.empty()) throw Error(ErrorCode::invalid_input, "no samples");
  double best = 0.0;
  std::vector<double> proj(samples.size());
  for (const auto& v : directions) {
    for (std::size_t k = 0; k < samples.size(); ++k) proj[k] = samples[k].dot(v);
    best = std::max(best, subgaussian_norm_estimate(proj));
  }
  return best;
}

TailCheck subgaussian_tail_check(double delta, std::size_t samples, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_input, "δ must lie in (0,1)");
  TailCheck c;
  c.delta = delta;
  const double z = normal_quantile(1.0 - delta);
  c.exact = normal_pdf(z);
  c.bound = 3.0 * delta * std::sqrt(std::log(1.0 / delta));
  const Moments m = replicate(seed, samples, 1, Moments{}, [&](std::size_t, Stream& rng, Moments& acc) {
    const double x = rng.normal();
    acc.add(x > z ? std::abs(x) : 0.0);
  });
  c.estimate = m.mean();
  c.passes = c.estimate <= c.bound;
  return c;
}

AtomPrior::AtomPrior(std::vector<BetaAtom> atoms, double alpha) : atoms_(std::move(atoms)), alpha_(alpha) {
  if (atoms_.empty()) throw Error(ErrorCode::invalid_input, "no atoms");
  for (const auto& a : atoms_)
    if (!(a.a > 0.0 && a.b > 0.0)) throw Error(ErrorCode::invalid_input, "Beta parameters must be positive");
  if (!(alpha_ >= 0.0)) throw Error(ErrorCode::invalid_input, "tail exponent must be nonnegative");
}

double AtomPrior::tau() const {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_) t = std::min(t, a.mean());
  return t;
}

double AtomPrior::sigma2() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_) s = std::min(s, a.variance());
  return s;
}

AssumptionReport AtomPrior::check() const {
  AssumptionReport r;
  r.tau = tau();
  r.sigma2 = sigma2();
  r.alpha = alpha_;
  r.tail_holds = true;
  r.worst_tail_slack = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_) {
    for (int k = 1; k <= 100; ++k) {
      const double x = k / 100.0;
      const double cdf = boost::math::ibeta(a.a, a.b, x);
      const double floor = alpha_ == 0.0 ? std::exp(-1.0) : std::exp(-std::pow(x, -alpha_));
      r.worst_tail_slack = std::min(r.worst_tail_slack, cdf - floor);
      if (cdf < floor) r.tail_holds = false;
    }
  }
  return r;
}

}  // namespace biclab
