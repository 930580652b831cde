#include "biclab/bic_audit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "biclab/errors.hpp"
#include "biclab/parallel.hpp"

namespace biclab {

namespace {

struct MomentGrid {
  std::vector<Moments> cells;
  void merge(const MomentGrid& other) {
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k].merge(other.cells[k]);
  }
};

json se_value(double se, bool available) { return available ? json(se) : json(nullptr); }

}  // namespace

bool BicReport::all_certified() const {
  return std::all_of(rows.begin(), rows.end(), [](const MarginRow& r) { return r.undefined || r.certified; });
}

std::string BicReport::csv() const {
  std::ostringstream out;
  out << "t,i,j,margin,se,draw_margin,draw_se,oracle_margin,oracle_se,frequency,replications,certified,undefined\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.i << ',' << r.j << ',' << format_double(r.margin) << ','
        << (r.se_available ? format_double(r.se) : "NA") << ',' << format_double(r.draw_margin) << ','
        << (r.se_available ? format_double(r.draw_se) : "NA") << ',' << format_double(r.oracle_margin) << ','
        << (r.se_available ? format_double(r.oracle_se) : "NA") << ',' << format_double(r.frequency) << ','
        << r.replications << ',' << (r.certified ? 1 : 0) << ',' << (r.undefined ? 1 : 0) << '\n';
  }
  return out.str();
}

json BicReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"t", r.t},
                  {"i", r.i},
                  {"j", r.j},
                  {"margin", r.margin},
                  {"se", se_value(r.se, r.se_available)},
                  {"draw_margin", r.draw_margin},
                  {"oracle_margin", r.oracle_margin},
                  {"frequency", r.frequency},
                  {"certified", r.certified},
                  {"undefined", r.undefined}});
  }
  return json{{"rows", rs},
              {"times", times},
              {"frequency_sums", frequency_sums},
              {"seed", seed},
              {"config_hash", config_hash},
              {"conditioning_fraction", conditioning_fraction},
              {"all_certified", all_certified()}};
}

BicReport estimate_bic_margin(const LinearAuditConfig& config) {
  const ActionSet& actions = config.actions;
  const std::size_t n = actions.size();
  if (config.times.empty()) throw Error(ErrorCode::invalid_input, "no audit times");
  std::vector<int> times = config.times;
  std::sort(times.begin(), times.end());
  if (times.front() < 1) throw Error(ErrorCode::invalid_input, "audit times start at 1");
  if (config.schedule.schedule.size() + 1 < static_cast<std::size_t>(times.back()))
    throw Error(ErrorCode::invalid_input, "schedule shorter than the audited horizon");
  if (config.n_inner < 2) throw Error(ErrorCode::invalid_input, "need at least two inner samples");

  auto pairs = config.pairs;
  if (pairs.empty())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) pairs.emplace_back(i, j);
  for (const auto& [i, j] : pairs)
    if (i >= n || j >= n) throw Error(ErrorCode::invalid_input, "pair index out of range");

  const std::size_t T = times.size(), P = pairs.size();
  // cells: [margin | draw | oracle] per (t, pair), then frequency per (t, i)
  const std::size_t freq_base = 3 * T * P;
  MomentGrid zero{std::vector<Moments>(freq_base + T * n)};

  const MomentGrid acc = replicate(config.seed, config.replications, config.jobs, zero,
                                   [&](std::size_t, Stream& rng, MomentGrid& g) {
    const Vec l_star = sample_prior(config.prior, rng);
    std::vector<double> oracle_value(n);
    for (std::size_t k = 0; k < n; ++k) oracle_value[k] = actions[k].dot(l_star);
    const std::size_t a_star = best_action(actions, l_star);

    SpectralHistory history(config.prior.dim());
    std::vector<double> p(n), mu(n);
    std::vector<std::size_t> counts(n);
    Vec draw(config.prior.dim()), mean_acc(config.prior.dim());
    for (std::size_t ti = 0; ti < T; ++ti) {
      while (history.size() + 1 < static_cast<std::size_t>(times[ti])) {
        const std::size_t a = config.schedule.schedule[history.size()];
        history.push(static_cast<int>(a), actions[a], config.obs.draw(oracle_value[a], rng));
      }
      const PosteriorState post = condition(config.prior, history, config.obs, rng);
      PosteriorSampler sampler(post);
      const bool exact = has_exact_mean(post);
      // With an inexact mean the samples are split so that p and μ are
      // independent given the history, keeping p·(μ_i - μ_j) unbiased.
      const std::size_t n_prob = exact ? config.n_inner : config.n_inner / 2;
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t s = 0; s < n_prob; ++s) {
        sampler.draw(rng, draw);
        ++counts[best_action(actions, draw)];
      }
      Vec mean;
      if (exact) {
        mean = posterior_mean(post, rng);
      } else {
        mean_acc.setZero();
        for (std::size_t s = n_prob; s < config.n_inner; ++s) {
          sampler.draw(rng, draw);
          mean_acc += draw;
        }
        mean = mean_acc / static_cast<double>(config.n_inner - n_prob);
      }
      sampler.draw(rng, draw);
      const std::size_t ts_choice = best_action(actions, draw);
      for (std::size_t k = 0; k < n; ++k) {
        p[k] = static_cast<double>(counts[k]) / static_cast<double>(n_prob);
        mu[k] = actions[k].dot(mean);
        g.cells[freq_base + ti * n + k].add(p[k]);
      }
      for (std::size_t pi = 0; pi < P; ++pi) {
        const auto [i, j] = pairs[pi];
        const double gap = mu[i] - mu[j];
        g.cells[(ti * P + pi) * 3 + 0].add(p[i] * gap);
        g.cells[(ti * P + pi) * 3 + 1].add(ts_choice == i ? gap : 0.0);
        g.cells[(ti * P + pi) * 3 + 2].add(a_star == i ? oracle_value[i] - oracle_value[j] : 0.0);
      }
    }
  });

  BicReport report;
  report.times = times;
  report.seed = config.seed;
  report.config_hash = config.config_hash;
  for (std::size_t ti = 0; ti < T; ++ti) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += acc.cells[freq_base + ti * n + k].mean();
    report.frequency_sums.push_back(sum);
    for (std::size_t pi = 0; pi < P; ++pi) {
      const auto [i, j] = pairs[pi];
      const Moments& m = acc.cells[(ti * P + pi) * 3 + 0];
      const Moments& d = acc.cells[(ti * P + pi) * 3 + 1];
      const Moments& o = acc.cells[(ti * P + pi) * 3 + 2];
      MarginRow row;
      row.t = times[ti];
      row.i = i;
      row.j = j;
      row.margin = m.mean();
      row.se = m.standard_error();
      row.draw_margin = d.mean();
      row.draw_se = d.standard_error();
      row.oracle_margin = o.mean();
      row.oracle_se = o.standard_error();
      row.frequency = acc.cells[freq_base + ti * n + i].mean();
      row.replications = config.replications;
      row.se_available = std::isfinite(row.se);
      row.undefined = row.frequency == 0.0;
      row.certified = !row.se_available || row.margin >= -config.z * row.se;
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string CorollaryReport::csv() const {
  std::ostringstream out;
  out << "i,j,probability,probability_se,bound,conditional_margin,conditional_se,joint_margin\n";
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.conditional_margin.size(); ++j) {
      if (j == r.i) continue;
      out << r.i << ',' << j << ',' << format_double(r.probability) << ',' << format_double(r.probability_se) << ','
          << format_double(r.bound) << ',' << format_double(r.conditional_margin[j]) << ','
          << format_double(r.conditional_se[j]) << ',' << format_double(r.joint_margin[j]) << '\n';
    }
  return out.str();
}

json CorollaryReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"i", r.i},
                  {"probability", r.probability},
                  {"probability_se", r.probability_se},
                  {"bound", r.bound},
                  {"bound_holds", r.bound_holds},
                  {"conditional_margin", r.conditional_margin},
                  {"conditional_se", r.conditional_se},
                  {"joint_margin", r.joint_margin}});
  return json{{"rows", rs}, {"separation", separation}, {"regularity", regularity}, {"passes", passes}};
}

CorollaryReport audit_corollary_margins(const ConvexBody& body, const ActionSet& actions, std::size_t replications,
                                        std::uint64_t seed, unsigned jobs) {
  const std::size_t n = actions.size();
  if (body.dim() != actions.dim()) throw Error(ErrorCode::invalid_input, "body and actions differ in dimension");
  // cells: indicator per i, then per (i, j) the in-class values and the joint term
  MomentGrid zero{std::vector<Moments>(n + 2 * n * n)};
  const MomentGrid acc = replicate(seed, replications, jobs, zero, [&](std::size_t, Stream& rng, MomentGrid& g) {
    const Vec l = sample_uniform(body, rng);
    const std::size_t star = best_action(actions, l);
    for (std::size_t i = 0; i < n; ++i) {
      g.cells[i].add(i == star ? 1.0 : 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double gap = l.dot(actions[i] - actions[j]);
        if (i == star) g.cells[n + i * n + j].add(gap);
        g.cells[n + n * n + i * n + j].add(i == star ? gap : 0.0);
      }
    }
  });

  CorollaryReport rep;
  rep.separation = separation(actions);
  rep.regularity = body.regularity();
  const double bound = std::pow(rep.regularity * rep.separation / 4.0, body.dim());
  rep.passes = true;
  for (std::size_t i = 0; i < n; ++i) {
    CorollaryRow r;
    r.i = i;
    r.probability = acc.cells[i].mean();
    r.probability_se = acc.cells[i].standard_error();
    r.bound = bound;
    r.bound_holds = r.probability + 3.0 * r.probability_se >= bound;
    rep.passes = rep.passes && r.bound_holds;
    for (std::size_t j = 0; j < n; ++j) {
      const Moments& c = acc.cells[n + i * n + j];
      r.conditional_margin.push_back(c.mean());
      r.conditional_se.push_back(c.standard_error());
      r.joint_margin.push_back(acc.cells[n + n * n + i * n + j].mean());
    }
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

std::vector<Vec> counterexample_1_actions() {
  Vec a1(2), a2(2), a3(2);
  a1 << 1.0, 0.0;
  a2 << -1.0, 0.0;
  a3 << 1.8, 0.6;
  return {a1, a2, a3};
}

json CounterexampleOneReport::to_json() const {
  json subs = json::array();
  for (int k = 0; k < 3; ++k)
    subs.push_back({{"first_action", k + 1}, {"margin", sub_margin[k]}, {"se", sub_se[k]}, {"probability", sub_probability[k]}});
  return json{{"margin", margin},
              {"margin_se", margin_se},
              {"draw_margin", draw_margin},
              {"draw_se", draw_se},
              {"recommend_probability", recommend_probability},
              {"conditional_margin", conditional_margin},
              {"conditional_se", conditional_se},
              {"by_first_action", subs},
              {"first_two_margin", first_two_margin},
              {"first_two_se", first_two_se},
              {"replications", replications},
              {"positive", positive},
              {"third_case_zero", third_case_zero}};
}

namespace {

// P[argmax_k <c + s w, A_k> = i] for s ~ N(0,1).
double line_argmax_probability(const std::vector<Vec>& actions, const Vec& c, const Vec& w, std::size_t i) {
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (k == i) continue;
    const Vec diff = actions[i] - actions[k];
    const double base = c.dot(diff), slope = w.dot(diff);
    if (slope > 0.0) lo = std::max(lo, -base / slope);
    else if (slope < 0.0) hi = std::min(hi, -base / slope);
    else if (base < 0.0 || (base == 0.0 && k < i)) return 0.0;
  }
  if (hi <= lo) return 0.0;
  return normal_cdf(hi) - normal_cdf(lo);
}

struct CexAcc {
  Moments margin, draw, prob;
  Moments sub[3], first_two;
  Moments first[3];
  // for the ratio standard error
  double cross = 0.0;
  void merge(const CexAcc& o) {
    margin.merge(o.margin);
    draw.merge(o.draw);
    prob.merge(o.prob);
    for (int k = 0; k < 3; ++k) {
      sub[k].merge(o.sub[k]);
      first[k].merge(o.first[k]);
    }
    first_two.merge(o.first_two);
    cross += o.cross;
  }
};

}  // namespace

CounterexampleOneReport run_counterexample_1(std::size_t replications, std::uint64_t seed, unsigned jobs,
                                             const Mat& covariance, const std::vector<Vec>& actions_in) {
  const std::vector<Vec> acts = actions_in.empty() ? counterexample_1_actions() : actions_in;
  if (acts.size() != 3 || covariance.rows() != 2) throw Error(ErrorCode::invalid_input, "instance must have three actions in d = 2");
  const ActionSet actions = ActionSet::general(acts);
  const LinearPrior prior = LinearPrior::gaussian(covariance);

  const CexAcc acc = replicate(seed, replications, jobs, CexAcc{}, [&](std::size_t, Stream& rng, CexAcc& a) {
    const Vec l_star = sample_prior(prior, rng);
    const Vec first_draw = sample_prior(prior, rng);
    const std::size_t a1 = best_action(actions, first_draw);
    Mat row = acts[a1].transpose();
    Vec value(1);
    value[0] = acts[a1].dot(l_star);
    const GaussianPosterior post = condition_gaussian_exact(Vec::Zero(2), covariance, row, value);
    // rank-one posterior: l = mean + s w
    Eigen::SelfAdjointEigenSolver<Mat> es(post.covariance);
    const Vec w = es.eigenvectors().col(1) * std::sqrt(std::max(0.0, es.eigenvalues()[1]));
    const double p1 = line_argmax_probability(acts, post.mean, w, 0);
    const double gap = post.mean.dot(acts[2] - acts[0]);
    const double term = p1 * gap;
    a.margin.add(term);
    a.prob.add(p1);
    a.cross += term * p1;
    const Vec second_draw = post.mean + rng.normal() * w;
    const bool rec1 = best_action(actions, second_draw) == 0;
    a.draw.add(rec1 ? l_star.dot(acts[2] - acts[0]) : 0.0);
    for (std::size_t k = 0; k < 3; ++k) {
      a.sub[k].add(a1 == k ? term : 0.0);
      a.first[k].add(a1 == k ? 1.0 : 0.0);
    }
    a.first_two.add(a1 != 2 ? term : 0.0);
  });

  CounterexampleOneReport r;
  r.replications = replications;
  r.margin = acc.margin.mean();
  r.margin_se = acc.margin.standard_error();
  r.draw_margin = acc.draw.mean();
  r.draw_se = acc.draw.standard_error();
  r.recommend_probability = acc.prob.mean();
  r.conditional_margin = r.margin / r.recommend_probability;
  // delta method for a ratio of means
  const double n = acc.margin.count;
  const double cov = (acc.cross - n * r.margin * r.recommend_probability) / (n - 1.0);
  const double q = r.recommend_probability;
  const double var = (acc.margin.variance() - 2.0 * r.conditional_margin * cov +
                      r.conditional_margin * r.conditional_margin * acc.prob.variance()) /
                     (q * q * n);
  r.conditional_se = std::sqrt(std::max(0.0, var));
  for (int k = 0; k < 3; ++k) {
    r.sub_margin[k] = acc.sub[k].mean();
    r.sub_se[k] = acc.sub[k].standard_error();
    r.sub_probability[k] = acc.first[k].mean();
  }
  r.first_two_margin = acc.first_two.mean();
  r.first_two_se = acc.first_two.standard_error();
  r.positive = r.margin - kCertifyZ * r.margin_se > 0.0;
  r.third_case_zero = std::abs(r.sub_margin[2]) <= kCertifyZ * r.sub_se[2];
  return r;
}

std::string DecayReport::csv() const {
  std::ostringstream out;
  out << "d,tail,tail_se,censored,inner_mean,inner_se,inner_exact\n";
  for (const auto& r : rows)
    out << r.d << ',' << (r.censored ? "NA" : format_double(r.tail)) << ',' << format_double(r.tail_se) << ','
        << (r.censored ? 1 : 0) << ',' << format_double(r.inner_mean) << ',' << format_double(r.inner_se) << ','
        << format_double(r.inner_exact) << '\n';
  return out.str();
}

json DecayReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"d", r.d},
                  {"tail", r.censored ? json(nullptr) : json(r.tail)},
                  {"tail_se", r.tail_se},
                  {"censored", r.censored},
                  {"inner_mean", r.inner_mean},
                  {"inner_se", r.inner_se},
                  {"inner_exact", r.inner_exact},
                  {"inner_matches", r.inner_matches}});
  return json{{"rows", rs}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"passes", passes}};
}

namespace {

struct PairMoments {
  Moments tail, inner;
  void merge(const PairMoments& o) {
    tail.merge(o.tail);
    inner.merge(o.inner);
  }
};

}  // namespace

DecayReport decay_probe_counterexample_2(const std::vector<int>& dims, std::size_t replications, std::uint64_t seed,
                                         unsigned jobs) {
  DecayReport rep;
  std::vector<double> xs, ys;
  bool all_match = true;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const int d = dims[k];
    if (d < 2) throw Error(ErrorCode::invalid_input, "dimension must be at least 2");
    Vec lo = Vec::Constant(d, -0.5), hi = Vec::Ones(d);
    lo[d - 1] = -1.0;
    const double root = std::sqrt(static_cast<double>(d));
    const ConvexBody body = ConvexBody::box(lo, hi, 0.5).scaled(1.0 / root);
    Vec a1 = Vec::Constant(d, 1.0 / (2.0 * root));
    a1[d - 1] = 0.0;
    const PairMoments acc = replicate(mix64(seed) + static_cast<std::uint64_t>(d), replications, jobs, PairMoments{},
                                      [&](std::size_t, Stream& rng, PairMoments& m) {
                                        const double x = sample_uniform(body, rng).dot(a1);
                                        m.tail.add(std::max(0.0, 0.1 - x));
                                        m.inner.add(x);
                                      });
    DecayRow r;
    r.d = d;
    r.tail = acc.tail.mean();
    r.tail_se = acc.tail.standard_error();
    r.censored = r.tail < 1.0 / static_cast<double>(replications);
    r.inner_mean = acc.inner.mean();
    r.inner_se = acc.inner.standard_error();
    r.inner_exact = (d - 1.0) / (8.0 * d);
    r.inner_matches = std::abs(r.inner_mean - r.inner_exact) <= 3.0 * r.inner_se;
    all_match = all_match && r.inner_matches;
    if (!r.censored) {
      xs.push_back(d);
      ys.push_back(std::log(r.tail));
    }
    rep.rows.push_back(r);
  }
  if (xs.size() >= 2) rep.fit = least_squares_line(xs, ys);
  rep.passes = xs.size() >= 2 && rep.fit.slope < 0.0 && rep.fit.r_squared >= 0.9 && all_match;
  return rep;
}

WrapResult simulate_extreme_point_wrapper(const PolytopeVertexSet& vertices, const std::vector<Vec>& inner_actions,
                                          const Vec& l_star, Stream& rng) {
  const int d = vertices.dim();
  WrapResult out;
  out.slots_per_step = static_cast<std::size_t>(d) + 1;
  Mat inner = Mat::Zero(d, d), wrapped = Mat::Zero(d, d);
  const auto reward_of = [&](std::size_t v) {
    const double mean = std::clamp(0.5 * (1.0 + vertices[v].dot(l_star)), 0.0, 1.0);
    return rng.bernoulli(mean) ? 1.0 : 0.0;
  };
  for (std::size_t t = 0; t < inner_actions.size(); ++t) {
    const Decomposition dec = caratheodory_decompose(vertices, inner_actions[t]);
    inner += inner_actions[t] * inner_actions[t].transpose();
    std::vector<double> weights;
    std::vector<double> rewards;
    for (std::size_t slot = 0; slot < out.slots_per_step; ++slot) {
      const std::size_t v = slot < dec.terms.size() ? dec.terms[slot].vertex : dec.chart_base;
      const double r = reward_of(v);
      out.plays.push_back({t, v, r});
      wrapped += vertices[v] * vertices[v].transpose();
      if (slot < dec.terms.size()) {
        weights.push_back(dec.terms[slot].weight);
        rewards.push_back(r);
      }
    }
    out.feedback.push_back(rewards[rng.categorical(weights)]);
  }
  out.inner_gamma = min_eigenvalue(inner);
  out.wrapped_gamma = min_eigenvalue(wrapped);
  out.gram_gap = min_eigenvalue(wrapped - inner);
  out.dominates = out.wrapped_gamma >= out.inner_gamma - 1e-9 && out.gram_gap >= -1e-9;
  return out;
}

}  // namespace biclab
