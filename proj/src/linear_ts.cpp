#include "biclab/linear_ts.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "biclab/errors.hpp"
#include "biclab/parallel.hpp"
#include "biclab/stats.hpp"

namespace biclab {

SpectralHistory::SpectralHistory(int dim) : dim_(dim), gram_(Mat::Zero(dim, dim)) {}

void SpectralHistory::push(int action_index, const Vec& action, double reward) {
  if (action.size() != dim_) throw Error(ErrorCode::invalid_input, "action dimension mismatch");
  steps_.push_back({static_cast<int>(steps_.size()) + 1, action_index, action, reward});
  gram_ += action * action.transpose();
  gamma_ = std::max(0.0, min_eigenvalue(gram_));
}

Mat SpectralHistory::design() const {
  Mat X(static_cast<Eigen::Index>(steps_.size()), dim_);
  for (std::size_t s = 0; s < steps_.size(); ++s) X.row(static_cast<Eigen::Index>(s)) = steps_[s].action.transpose();
  return X;
}

Vec SpectralHistory::rewards() const {
  Vec y(static_cast<Eigen::Index>(steps_.size()));
  for (std::size_t s = 0; s < steps_.size(); ++s) y[static_cast<Eigen::Index>(s)] = steps_[s].reward;
  return y;
}

double spectral_floor(const SpectralHistory& history) { return history.empty() ? 0.0 : history.gamma(); }

double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  if (symmetric.rows() == 2) {
    const double a = symmetric(0, 0), b = symmetric(0, 1), c = symmetric(1, 1);
    return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

std::size_t thompson_step(const PosteriorState& posterior, const ActionSet& actions, Stream& rng, Vec* draw) {
  Vec l = posterior_sample(posterior, rng);
  const std::size_t i = best_action(actions, l);
  if (draw) *draw = std::move(l);
  return i;
}

double LinkFunction::value(double x) const {
  if (kind == LinkKind::identity) return x;
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double LinkFunction::derivative(double x) const {
  if (kind == LinkKind::identity) return 1.0;
  const double p = value(x);
  return p * (1.0 - p);
}

LinkFunction LinkFunction::from_string(const std::string& name) {
  if (name == "identity") return {LinkKind::identity};
  if (name == "logistic") return {LinkKind::logistic};
  throw Error(ErrorCode::invalid_input, "unsupported link \"" + name + "\"");
}

std::string LinkFunction::name() const { return kind == LinkKind::identity ? "identity" : "logistic"; }

LinkConstants link_constants(const LinkFunction& link) {
  LinkConstants c;
  if (link.kind == LinkKind::logistic) {
    c.M = 0.25;
    c.m = std::exp(1.0) / ((1.0 + std::exp(1.0)) * (1.0 + std::exp(1.0)));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double d = link.derivative(-1.0 + k * 1e-4);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (std::abs(lo - c.m) > 1e-12 || std::abs(hi - c.M) > 1e-12)
    throw Error(ErrorCode::solver_error, "link constants disagree with the grid check");
  return c;
}

double gamma_threshold(int d, double t, double r, double eps, double C, ThresholdVariant variant, LinkConstants link) {
  if (d < 1 || !(r > 0.0) || !(eps > 0.0) || !(C > 0.0))
    throw Error(ErrorCode::invalid_input, "threshold parameters must be positive");
  const double re = r * eps;
  const double geom = std::log(4.0 / re) / (re * re);
  if (variant == ThresholdVariant::linear) {
    if (!(t >= 2.0)) throw Error(ErrorCode::invalid_input, "threshold needs t >= 2");
    return C * std::pow(d, 4) * std::log(t) * geom;
  }
  if (!(link.m > 0.0)) throw Error(ErrorCode::invalid_input, "link lower constant must be positive");
  return C * link.M * link.M * std::pow(d, 3) * geom / std::pow(link.m, 4);
}

GlmFit glm_mle(const SpectralHistory& history, const LinkFunction& link, double tolerance, int max_iterations) {
  if (history.empty() || history.gamma() <= 1e-12) throw Error(ErrorCode::rank_deficient, "Gram matrix is singular");
  const Mat X = history.design();
  const Vec R = history.rewards();
  const auto score_at = [&](const Vec& l) {
    Vec res(R.size());
    for (Eigen::Index s = 0; s < R.size(); ++s) res[s] = R[s] - link.value(X.row(s).dot(l));
    return Vec(X.transpose() * res);
  };

  GlmFit fit;
  fit.estimate = Vec::Zero(history.dim());
  Vec score = score_at(fit.estimate);
  fit.residual = score.norm();
  while (fit.residual > tolerance) {
    if (fit.iterations >= max_iterations)
      throw Error(ErrorCode::iteration_limit, "Newton did not converge; residual " + format_double(fit.residual));
    ++fit.iterations;
    Mat H = Mat::Zero(history.dim(), history.dim());
    for (Eigen::Index s = 0; s < R.size(); ++s) H += link.derivative(X.row(s).dot(fit.estimate)) * X.row(s).transpose() * X.row(s);
    const Vec step = H.ldlt().solve(score);
    double scale = 1.0;
    for (;;) {
      const Vec trial = fit.estimate + scale * step;
      const Vec trial_score = score_at(trial);
      if (trial_score.norm() < fit.residual || scale < 1e-10) {
        fit.estimate = trial;
        score = trial_score;
        fit.residual = trial_score.norm();
        break;
      }
      scale *= 0.5;
    }
    if (!fit.estimate.allFinite())
      throw Error(ErrorCode::iteration_limit, "Newton diverged; residual " + format_double(fit.residual));
  }
  return fit;
}

PolicySpec round_robin_schedule(int dim, int horizon) {
  PolicySpec p;
  p.kind = PolicySpec::Kind::schedule;
  for (int s = 0; s < horizon; ++s) p.schedule.push_back(static_cast<std::size_t>(s % dim));
  return p;
}

Transcript run_episode(const LinearPrior& prior, const ActionSet& actions, const ObsModel& obs, const PolicySpec& policy,
                       int horizon, Stream& rng, const ConditionOptions& options) {
  if (horizon < 0) throw Error(ErrorCode::invalid_input, "negative horizon");
  if (policy.kind == PolicySpec::Kind::schedule && policy.schedule.size() < static_cast<std::size_t>(horizon))
    throw Error(ErrorCode::invalid_input, "schedule shorter than horizon");
  Transcript tr;
  tr.l_star = sample_prior(prior, rng, options.sampler);
  tr.history = SpectralHistory(prior.dim());
  for (int s = 0; s < horizon; ++s) {
    std::size_t i = 0;
    Vec mean;
    if (policy.kind == PolicySpec::Kind::schedule) {
      i = policy.schedule[static_cast<std::size_t>(s)];
      if (i >= actions.size()) throw Error(ErrorCode::invalid_input, "schedule index out of range");
    } else {
      const PosteriorState post = condition(prior, tr.history, obs, rng, options);
      mean = posterior_mean(post, rng);
      i = policy.kind == PolicySpec::Kind::thompson ? thompson_step(post, actions, rng) : best_action(actions, mean);
    }
    const double reward = obs.draw(actions[i].dot(tr.l_star), rng);
    tr.history.push(static_cast<int>(i), actions[i], reward);
    tr.steps.push_back({std::move(mean), tr.history.gamma()});
  }
  return tr;
}

std::string transcript_csv(const Transcript& transcript) {
  std::ostringstream out;
  out << "time,action_index,action_vector,reward,gamma\n";
  const auto& steps = transcript.history.steps();
  for (std::size_t s = 0; s < steps.size(); ++s) {
    out << steps[s].time << ',' << steps[s].action_index << ',';
    for (Eigen::Index k = 0; k < steps[s].action.size(); ++k) out << (k ? ";" : "") << format_double(steps[s].action[k]);
    out << ',' << format_double(steps[s].reward) << ',' << format_double(transcript.steps[s].gamma) << '\n';
  }
  return out.str();
}

namespace {

struct ProbeAcc {
  Moments exceed;
  std::size_t nonconverged = 0;
  double max_residual = 0.0;
  void merge(const ProbeAcc& o) {
    exceed.merge(o.exceed);
    nonconverged += o.nonconverged;
    max_residual = std::max(max_residual, o.max_residual);
  }
};

}  // namespace

GlmProbeResult glm_concentration_probe(const GlmProbeConfig& config) {
  const LinkFunction link{LinkKind::logistic};
  const LinkConstants lc = link_constants(link);
  const int d = config.dim;
  GlmProbeResult out;
  out.gamma = static_cast<int>(std::ceil(config.C * lc.M * lc.M / std::pow(lc.m, 4) *
                                         (d * d + std::log(1.0 / config.delta))));
  out.gamma = std::max(out.gamma, 1);
  out.radius_factor = 1.0 / (lc.m * std::sqrt(static_cast<double>(out.gamma)));
  const Vec v = Vec::Ones(d) / std::sqrt(static_cast<double>(d));
  const ConvexBody ball = ConvexBody::ball(d, 1.0, 1.0);

  const ProbeAcc acc = replicate(config.seed, config.replications, config.jobs, ProbeAcc{},
                                 [&](std::size_t, Stream& rng, ProbeAcc& a) {
                                   const Vec l = sample_uniform(ball, rng);
                                   SpectralHistory h(d);
                                   for (int round = 0; round < out.gamma; ++round)
                                     for (int i = 0; i < d; ++i) {
                                       Vec e = Vec::Zero(d);
                                       e[i] = 1.0;
                                       h.push(i, e, rng.bernoulli(link.value(l[i])) ? 1.0 : 0.0);
                                     }
                                   try {
                                     const GlmFit fit = glm_mle(h, link);
                                     a.max_residual = std::max(a.max_residual, fit.residual);
                                     a.exceed.add(std::abs((fit.estimate - l).dot(v)) > out.radius_factor ? 1.0 : 0.0);
                                   } catch (const Error& e) {
                                     if (e.code() != ErrorCode::iteration_limit) throw;
                                     ++a.nonconverged;
                                     a.exceed.add(1.0);
                                   }
                                 });
  out.frequency = acc.exceed.mean();
  out.standard_error = acc.exceed.standard_error();
  out.nonconverged = acc.nonconverged;
  out.max_residual = acc.max_residual;
  out.passes = out.frequency <= config.delta + 3.0 * out.standard_error;
  return out;
}

}  // namespace biclab
