#include "biclab/recgame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "biclab/errors.hpp"
#include "biclab/lp.hpp"
#include "biclab/stats.hpp"

namespace biclab {

namespace {

constexpr std::size_t kEnumerationLimit = 100000;
constexpr double kReducedCostTolerance = 1e-10;
constexpr int kMaxColumnRounds = 2000;

double log_beta(double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); }

double beta_binomial_log_pmf(const BetaAtom& atom, int n, int k) {
  double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return log_choose + log_beta(atom.a + k, atom.b + n - k) - log_beta(atom.a, atom.b);
}

void fill_row(const SemibanditInstance& inst, const std::vector<double>& means, Mat& values,
              std::size_t s) {
  for (std::size_t k = 0; k < inst.size(); ++k) values(s, k) = inst.action_value(k, means);
}

const char* signal_name(SignalKind k) {
  switch (k) {
    case SignalKind::finite: return "finite";
    case SignalKind::infinite: return "infinite";
    case SignalKind::easy: return "easy";
  }
  return "finite";
}

json indices_json(const std::vector<std::size_t>& v) {
  json out = json::array();
  for (auto x : v) out.push_back(x);
  return out;
}

// Per-scenario contribution to the menu action's padding against its worst
// response, used for the Monte Carlo standard error.
double padding_se(const GameSpec& game, const Mat& probs, const std::vector<std::size_t>& argmin) {
  if (game.enumerated) return 0.0;
  Moments m;
  for (std::size_t s = 0; s < game.scenarios(); ++s) {
    double c = 0.0;
    for (std::size_t a = 0; a < game.menu.size(); ++a)
      if (probs(s, a) > 0.0) c += probs(s, a) * game.gap(s, a, argmin[a]);
    m.add(c);
  }
  double se = m.standard_error();
  return std::isfinite(se) ? se : 0.0;
}

}  // namespace

SignalSpec SignalSpec::finite_uniform(std::size_t atoms, std::size_t j, int n) {
  SignalSpec spec;
  spec.samples.assign(atoms, 0);
  for (std::size_t i = 0; i <= j && i < atoms; ++i) spec.samples[i] = n;
  return spec;
}

std::size_t GameSpec::scenario_of(const std::vector<int>& successes) const {
  if (!enumerated) throw Error(ErrorCode::invalid_input, "scenario_of needs an enumerated game");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < informed.size(); ++i) {
    int k = successes[informed[i]];
    if (k < 0 || static_cast<std::size_t>(k) >= radix[i])
      throw Error(ErrorCode::invalid_input, "success count out of range");
    idx += static_cast<std::size_t>(k) * stride[i];
  }
  return idx;
}

void GameSpec::validate() const {
  if (weights.empty() || values.rows() != static_cast<Eigen::Index>(weights.size()))
    throw Error(ErrorCode::invalid_input, "game has no scenarios or mismatched values");
  if (menu.empty()) throw Error(ErrorCode::invalid_input, "empty recommendation menu");
  if (responses.empty()) throw Error(ErrorCode::invalid_input, "empty response menu");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::invalid_input, "negative scenario weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::invalid_input, "weights do not sum to 1");
  for (auto k : menu)
    if (k >= static_cast<std::size_t>(values.cols())) throw Error(ErrorCode::invalid_input, "menu index");
  for (auto k : responses)
    if (k >= static_cast<std::size_t>(values.cols())) throw Error(ErrorCode::invalid_input, "response index");
}

json GameSpec::to_json() const {
  json j_out;
  j_out["j"] = j;
  j_out["signal"] = {{"kind", signal_name(signal.kind)}, {"samples", signal.samples}};
  j_out["menu"] = indices_json(menu);
  j_out["responses"] = indices_json(responses);
  j_out["weights"] = weights;
  j_out["values"] = biclab::to_json(values);
  j_out["enumerated"] = enumerated;
  return j_out;
}

json PaddedPolicy::to_json() const {
  return {{"j", j}, {"probs", biclab::to_json(probs)}, {"padding", padding}, {"total", total}};
}

json GameSolution::to_json() const {
  return {{"value", value},         {"policy", policy.to_json()}, {"agent", biclab::to_json(agent)},
          {"dual_bound", dual_bound}, {"duality_gap", duality_gap}, {"se", se},
          {"columns", columns},     {"iterations", iterations}};
}

GameSpec build_game(const SemibanditInstance& inst, std::size_t j, const SignalSpec& signal,
                    std::size_t scenario_count, Stream& rng) {
  const std::size_t d = inst.atoms();
  if (j >= d) throw Error(ErrorCode::invalid_input, "atom index out of range");
  if (scenario_count < 10) throw Error(ErrorCode::invalid_input, "scenario count below 10");
  GameSpec game;
  game.j = j;
  game.signal = signal;
  game.menu = inst.containing(j);
  game.responses = inst.avoiding(j);
  if (game.responses.empty()) throw Error(ErrorCode::invalid_input, "no action avoids the atom");

  std::vector<double> prior = inst.prior_means();
  std::vector<double> means = prior;

  if (signal.kind == SignalKind::finite) {
    if (signal.samples.size() != d) throw Error(ErrorCode::invalid_input, "signal spec size mismatch");
    for (std::size_t i = 0; i < d; ++i) {
      if (signal.samples[i] < 0) throw Error(ErrorCode::invalid_input, "negative sample count");
      if (i > j && signal.samples[i] != 0)
        throw Error(ErrorCode::invalid_input, "atoms after j must carry no samples");
      if (signal.samples[i] > 0) game.informed.push_back(i);
    }
    double product = 1.0;
    for (auto i : game.informed) product *= signal.samples[i] + 1.0;
    if (product <= static_cast<double>(kEnumerationLimit)) {
      game.enumerated = true;
      std::size_t total = 1;
      for (auto i : game.informed) {
        game.radix.push_back(static_cast<std::size_t>(signal.samples[i]) + 1);
        game.stride.push_back(total);
        total *= game.radix.back();
      }
      // Log pmf tables per informed atom.
      std::vector<std::vector<double>> log_pmf(game.informed.size());
      for (std::size_t u = 0; u < game.informed.size(); ++u) {
        const auto& atom = inst.prior()[game.informed[u]];
        int n = signal.samples[game.informed[u]];
        for (int k = 0; k <= n; ++k) log_pmf[u].push_back(beta_binomial_log_pmf(atom, n, k));
      }
      game.weights.resize(total);
      game.values.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(inst.size()));
      std::vector<int> counts(game.informed.size(), 0);
      double sum = 0.0;
      for (std::size_t s = 0; s < total; ++s) {
        double lw = 0.0;
        for (std::size_t u = 0; u < game.informed.size(); ++u) {
          std::size_t i = game.informed[u];
          const auto& atom = inst.prior()[i];
          int n = signal.samples[i];
          means[i] = (atom.a + counts[u]) / (atom.a + atom.b + n);
          lw += log_pmf[u][static_cast<std::size_t>(counts[u])];
        }
        game.weights[s] = std::exp(lw);
        sum += game.weights[s];
        fill_row(inst, means, game.values, s);
        for (std::size_t u = 0; u < counts.size(); ++u) {
          if (static_cast<std::size_t>(++counts[u]) < game.radix[u]) break;
          counts[u] = 0;
        }
      }
      for (auto& w : game.weights) w /= sum;
    } else {
      game.weights.assign(scenario_count, 1.0 / static_cast<double>(scenario_count));
      game.values.resize(static_cast<Eigen::Index>(scenario_count), static_cast<Eigen::Index>(inst.size()));
      for (std::size_t s = 0; s < scenario_count; ++s) {
        for (auto i : game.informed) {
          const auto& atom = inst.prior()[i];
          int n = signal.samples[i];
          int k = rng.binomial(n, rng.beta(atom.a, atom.b));
          means[i] = (atom.a + k) / (atom.a + atom.b + n);
        }
        fill_row(inst, means, game.values, s);
      }
    }
  } else {
    const std::size_t last = signal.kind == SignalKind::easy ? d : j + 1;
    game.weights.assign(scenario_count, 1.0 / static_cast<double>(scenario_count));
    game.values.resize(static_cast<Eigen::Index>(scenario_count), static_cast<Eigen::Index>(inst.size()));
    for (std::size_t s = 0; s < scenario_count; ++s) {
      for (std::size_t i = 0; i < last; ++i) means[i] = rng.beta(inst.prior()[i].a, inst.prior()[i].b);
      fill_row(inst, means, game.values, s);
    }
  }
  // Equal MC weights may miss 1 by rounding; renormalize exactly.
  double sum = 0.0;
  for (double w : game.weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-15)
    for (auto& w : game.weights) w /= sum;
  return game;
}

GameSolution solve_minimax(const GameSpec& game) {
  game.validate();
  const std::size_t S = game.scenarios(), M = game.menu.size(), R = game.responses.size();
  const std::size_t pair_rows = M * R;

  // A column is a pure planner strategy: scenario -> menu index or -1.
  std::vector<std::vector<int>> columns;
  std::vector<Mat> payoffs;  // M x R expected gains of each column
  auto column_payoff = [&](const std::vector<int>& rec) {
    Mat g = Mat::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(R));
    for (std::size_t s = 0; s < S; ++s) {
      if (rec[s] < 0) continue;
      auto a = static_cast<std::size_t>(rec[s]);
      for (std::size_t b = 0; b < R; ++b) g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += game.weights[s] * game.gap(s, a, b);
    }
    return g;
  };
  for (std::size_t a = 0; a < M; ++a) {
    columns.emplace_back(S, static_cast<int>(a));
    payoffs.push_back(column_payoff(columns.back()));
  }

  GameSolution sol;
  LpResult lp_result;
  Eigen::VectorXd y;
  double pricing_value = 0.0;
  std::vector<int> best(S, -1);
  int rounds = 0;
  for (;; ++rounds) {
    const std::size_t K = columns.size();
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M + K));
    lp.objective.head(static_cast<Eigen::Index>(M)).setOnes();
    lp.rows = Mat::Zero(static_cast<Eigen::Index>(pair_rows + 1), static_cast<Eigen::Index>(M + K));
    lp.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pair_rows + 1));
    lp.senses.assign(pair_rows + 1, RowSense::less_equal);
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < R; ++b) {
        auto row = static_cast<Eigen::Index>(a * R + b);
        lp.rows(row, static_cast<Eigen::Index>(a)) = 1.0;
        for (std::size_t k = 0; k < K; ++k)
          lp.rows(row, static_cast<Eigen::Index>(M + k)) = -payoffs[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    for (std::size_t k = 0; k < K; ++k) lp.rows(static_cast<Eigen::Index>(pair_rows), static_cast<Eigen::Index>(M + k)) = 1.0;
    lp.rhs(static_cast<Eigen::Index>(pair_rows)) = 1.0;
    lp_result = solve_lp(lp);
    if (lp_result.status != LpStatus::optimal) {
      std::ostringstream msg;
      msg << "game LP did not reach optimality (infeasibility " << lp_result.infeasibility
          << ", pivots " << lp_result.pivots << ")";
      throw Error(ErrorCode::solver_error, msg.str());
    }
    y = lp_result.duals;
    const double sigma = y(static_cast<Eigen::Index>(pair_rows));

    // Pricing: each scenario independently picks its best menu action.
    pricing_value = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double top = 0.0;
      int arg = -1;
      for (std::size_t a = 0; a < M; ++a) {
        double score = 0.0;
        for (std::size_t b = 0; b < R; ++b) score += y(static_cast<Eigen::Index>(a * R + b)) * game.gap(s, a, b);
        if (score > top) {
          top = score;
          arg = static_cast<int>(a);
        }
      }
      best[s] = arg;
      pricing_value += game.weights[s] * top;
    }
    if (pricing_value - sigma <= kReducedCostTolerance * (1.0 + std::abs(sigma))) break;
    if (rounds >= kMaxColumnRounds) break;
    if (std::find(columns.begin(), columns.end(), best) != columns.end()) break;
    columns.push_back(best);
    payoffs.push_back(column_payoff(best));
  }

  const std::size_t K = columns.size();
  PaddedPolicy policy;
  policy.j = game.j;
  policy.probs = Mat::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(M));
  for (std::size_t k = 0; k < K; ++k) {
    double mu = lp_result.x(static_cast<Eigen::Index>(M + k));
    if (mu <= 0.0) continue;
    for (std::size_t s = 0; s < S; ++s)
      if (columns[k][s] >= 0) policy.probs(static_cast<Eigen::Index>(s), columns[k][s]) += mu;
  }
  auto cert = verify_padding(PaddedPolicy{game.j, policy.probs, std::vector<double>(M, 0.0), 0.0}, game);
  policy.padding = cert.recomputed;
  for (auto& l : policy.padding) l = std::max(l, 0.0);
  policy.total = 0.0;
  for (double l : policy.padding) policy.total += l;

  sol.value = std::max(lp_result.value, 0.0);
  sol.policy = std::move(policy);
  sol.agent = Mat::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(R));
  for (std::size_t a = 0; a < M; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < R; ++b) row += std::max(0.0, y(static_cast<Eigen::Index>(a * R + b)));
    if (row > 0.0)
      for (std::size_t b = 0; b < R; ++b)
        sol.agent(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::max(0.0, y(static_cast<Eigen::Index>(a * R + b))) / row;
  }
  sol.dual_bound = pricing_value;
  sol.duality_gap = pricing_value - lp_result.value;
  sol.se = padding_se(game, sol.policy.probs, cert.argmin);
  sol.columns = static_cast<int>(K);
  sol.iterations = rounds + 1;
  return sol;
}

PaddingCertificate verify_padding(const PaddedPolicy& policy, const GameSpec& game) {
  const std::size_t S = game.scenarios(), M = game.menu.size(), R = game.responses.size();
  if (policy.probs.rows() != static_cast<Eigen::Index>(S) || policy.probs.cols() != static_cast<Eigen::Index>(M) ||
      policy.padding.size() != M)
    throw Error(ErrorCode::invalid_input, "policy dimensions do not match the game");
  PaddingCertificate cert;
  cert.recomputed.assign(M, 0.0);
  cert.argmin.assign(M, 0);
  bool simplex_ok = true;
  for (std::size_t s = 0; s < S; ++s) {
    double row = 0.0;
    for (std::size_t a = 0; a < M; ++a) {
      double p = policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      if (p < -1e-12) simplex_ok = false;
      row += p;
    }
    if (row > 1.0 + 1e-9) simplex_ok = false;
  }
  for (std::size_t a = 0; a < M; ++a) {
    double lo = 0.0;
    for (std::size_t b = 0; b < R; ++b) {
      double g = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double p = policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        if (p != 0.0) g += game.weights[s] * p * game.gap(s, a, b);
      }
      if (b == 0 || g < lo) {
        lo = g;
        cert.argmin[a] = b;
      }
    }
    cert.recomputed[a] = lo;
    cert.total += lo;
    cert.max_deviation = std::max(cert.max_deviation, std::abs(lo - policy.padding[a]));
  }
  cert.passes = simplex_ok && cert.max_deviation <= 1e-8 * (1.0 + std::abs(cert.total));
  return cert;
}

LiftedStrategy bic_lift(const PaddedPolicy& policy, const GameSpec& game, double p, double scale) {
  auto cert = verify_padding(policy, game);
  if (!(policy.total > 1e-12)) throw Error(ErrorCode::lift_undefined, "game value is zero");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_input, "p must lie in [0, 1]");
  const double threshold = scale / (scale + policy.total);
  if (p < threshold - 1e-12) throw Error(ErrorCode::precondition_violation, "p below d/(d + lambda)");
  const std::size_t S = game.scenarios(), M = game.menu.size(), R = game.responses.size();
  LiftedStrategy lift;
  lift.p = p;
  lift.q.resize(M);
  for (std::size_t a = 0; a < M; ++a) lift.q[a] = policy.padding[a] / policy.total;
  lift.gains = Mat::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(R));
  lift.bounds.resize(M);
  lift.inequality_holds = cert.passes;
  lift.nonnegative = true;
  for (std::size_t a = 0; a < M; ++a) {
    lift.bounds[a] = p * policy.padding[a] - scale * (1.0 - p) * lift.q[a];
    for (std::size_t b = 0; b < R; ++b) {
      double informed = 0.0, prior_gap = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double g = game.gap(s, a, b);
        informed += game.weights[s] * policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) * g;
        prior_gap += game.weights[s] * g;
      }
      double gain = p * informed + (1.0 - p) * lift.q[a] * prior_gap;
      lift.gains(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gain;
      if (gain < lift.bounds[a] - 1e-12) lift.inequality_holds = false;
      if (gain < -1e-12) lift.nonnegative = false;
    }
  }
  return lift;
}

EasyGameResult easy_game_value(const SemibanditInstance& inst, std::size_t j,
                               std::size_t scenario_count, Stream& rng) {
  Stream easy_rng = rng.split(0), inf_rng = rng.split(1);
  auto easy = solve_minimax(build_game(inst, j, SignalSpec::easy(), scenario_count, easy_rng));
  auto inf = solve_minimax(build_game(inst, j, SignalSpec::infinite(), scenario_count, inf_rng));
  EasyGameResult r;
  r.value = easy.value;
  r.se = easy.se;
  r.infinite_value = inf.value;
  r.infinite_se = inf.se;
  r.holds = r.value >= r.infinite_value - 3.0 * std::hypot(r.se, r.infinite_se);
  return r;
}

GapResult finite_sample_gap(const SemibanditInstance& inst, std::size_t j, int n,
                            std::size_t scenario_count, Stream& rng, double kappa) {
  if (n < 0) throw Error(ErrorCode::invalid_input, "negative sample count");
  Stream fin_rng = rng.split(0), inf_rng = rng.split(1);
  auto fin = solve_minimax(
      build_game(inst, j, SignalSpec::finite_uniform(inst.atoms(), j, n), scenario_count, fin_rng));
  auto inf = solve_minimax(build_game(inst, j, SignalSpec::infinite(), scenario_count, inf_rng));
  GapResult r;
  r.n = n;
  r.value = fin.value;
  r.se = fin.se;
  r.infinite_value = inf.value;
  r.infinite_se = inf.se;
  r.gap = inf.value - fin.value;
  const double d = static_cast<double>(inst.atoms());
  r.threshold = inf.value > 0.0
                    ? kappa * d * d * std::log(static_cast<double>(inst.size())) / (inf.value * inf.value)
                    : std::numeric_limits<double>::infinity();
  r.hypothesis = static_cast<double>(n) >= r.threshold;
  r.holds = !r.hypothesis || r.value >= r.infinite_value / 2.0 - 3.0 * std::hypot(r.se, r.infinite_se);
  return r;
}

std::string sweep_csv(const std::vector<GapResult>& rows, std::size_t j) {
  std::ostringstream out;
  out << "j,N,lambda,SE,lambda_inf,SE_inf,gap\n";
  for (const auto& r : rows)
    out << j << ',' << r.n << ',' << format_double(r.value) << ',' << format_double(r.se) << ','
        << format_double(r.infinite_value) << ',' << format_double(r.infinite_se) << ','
        << format_double(r.gap) << '\n';
  return out.str();
}

}  // namespace biclab
