#include "biclab/semibandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "biclab/errors.hpp"
#include "biclab/parallel.hpp"
#include "biclab/stats.hpp"

namespace biclab {

// SemibanditInstance ---------------------------------------------------------

SemibanditInstance::SemibanditInstance(AtomPrior prior, std::vector<std::vector<int>> actions)
    : prior_(std::move(prior)), actions_(std::move(actions)) {
  const std::size_t d = prior_.size();
  if (d == 0) throw Error(ErrorCode::invalid_input, "instance needs at least one atom");
  if (actions_.empty()) throw Error(ErrorCode::invalid_input, "instance needs at least one action");
  std::vector<bool> covered(d, false);
  for (auto& act : actions_) {
    if (act.empty()) throw Error(ErrorCode::invalid_input, "empty action");
    std::sort(act.begin(), act.end());
    if (std::adjacent_find(act.begin(), act.end()) != act.end())
      throw Error(ErrorCode::invalid_input, "repeated atom in an action");
    for (int a : act) {
      if (a < 0 || static_cast<std::size_t>(a) >= d) throw Error(ErrorCode::invalid_input, "atom index out of range");
      covered[static_cast<std::size_t>(a)] = true;
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    if (!covered[i]) throw Error(ErrorCode::invalid_input, "atom " + std::to_string(i) + " is in no action");
  containing_.assign(d, {});
  avoiding_.assign(d, {});
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < actions_.size(); ++k) {
      const auto& act = actions_[k];
      (std::binary_search(act.begin(), act.end(), static_cast<int>(j)) ? containing_ : avoiding_)[j].push_back(k);
    }
}

double SemibanditInstance::action_value(std::size_t k, const std::vector<double>& atom_means) const {
  double v = 0.0;
  for (int a : actions_[k]) v += atom_means[static_cast<std::size_t>(a)];
  return v;
}

std::size_t SemibanditInstance::greedy(const std::vector<double>& atom_means) const {
  std::size_t best = 0;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actions_.size(); ++k) {
    double v = action_value(k, atom_means);
    if (v > top) {
      top = v;
      best = k;
    }
  }
  return best;
}

std::vector<double> SemibanditInstance::prior_means() const {
  std::vector<double> m(atoms());
  for (std::size_t i = 0; i < atoms(); ++i) m[i] = prior_[i].mean();
  return m;
}

SemibanditInstance SemibanditInstance::reordered(const std::vector<int>& order) const {
  const std::size_t d = atoms();
  if (order.size() != d) throw Error(ErrorCode::invalid_input, "order size mismatch");
  std::vector<int> new_label(d, -1);
  std::vector<BetaAtom> atoms_sorted(d);
  for (std::size_t i = 0; i < d; ++i) {
    auto old = static_cast<std::size_t>(order[i]);
    if (old >= d || new_label[old] != -1) throw Error(ErrorCode::invalid_input, "order is not a permutation");
    new_label[old] = static_cast<int>(i);
    atoms_sorted[i] = prior_[old];
  }
  auto acts = actions_;
  for (auto& act : acts)
    for (auto& a : act) a = new_label[static_cast<std::size_t>(a)];
  return SemibanditInstance(AtomPrior(std::move(atoms_sorted), prior_.alpha()), std::move(acts));
}

json SemibanditInstance::to_json() const {
  json atoms_json = json::array();
  for (const auto& a : prior_.atoms()) atoms_json.push_back({{"a", a.a}, {"b", a.b}});
  return {{"atoms", atoms_json}, {"actions", actions_}, {"alpha", prior_.alpha()}};
}

SemibanditInstance SemibanditInstance::from_json(const json& j) {
  try {
    std::vector<BetaAtom> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back({a.at("a").get<double>(), a.at("b").get<double>()});
    double alpha = j.value("alpha", 1.0);
    return SemibanditInstance(AtomPrior(std::move(atoms), alpha),
                              j.at("actions").get<std::vector<std::vector<int>>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("bad instance: ") + e.what());
  }
}

// ZEROS machinery -------------------------------------------------------------

namespace {

double zeros_factor(const BetaAtom& atom, int n) {
  // B(a, b+n)/B(a, b) = Π_{k<n} (b+k)/(a+b+k), evaluated in log space.
  return std::exp(std::lgamma(atom.b + n) + std::lgamma(atom.a + atom.b) - std::lgamma(atom.b) -
                  std::lgamma(atom.a + atom.b + n));
}

double zeros_mean(const BetaAtom& atom, int n) { return atom.a / (atom.a + atom.b + n); }

}  // namespace

double epsilon_j(const SemibanditInstance& inst, int n, std::size_t j) {
  if (j >= inst.atoms()) throw Error(ErrorCode::invalid_input, "stage index out of range");
  if (n < 0) throw Error(ErrorCode::invalid_input, "negative sample count");
  double eps = 1.0;
  for (std::size_t i = 0; i < j; ++i) eps *= zeros_factor(inst.prior()[i], n);
  return eps;
}

McEstimate epsilon_j_monte_carlo(const SemibanditInstance& inst, int n, std::size_t j,
                                 std::size_t replications, std::uint64_t seed) {
  if (j >= inst.atoms()) throw Error(ErrorCode::invalid_input, "stage index out of range");
  const Moments m = replicate(seed, replications, 1, Moments{}, [&](std::size_t, Stream& rng, Moments& acc) {
    bool zeros = true;
    for (std::size_t i = 0; i < j && zeros; ++i) {
      double theta = rng.beta(inst.prior()[i].a, inst.prior()[i].b);
      zeros = rng.binomial(n, theta) == 0;
    }
    acc.add(zeros ? 1.0 : 0.0);
  });
  return {m.mean(), m.standard_error()};
}

long long n_lower_bound(const SemibanditInstance& inst, double guard) {
  const double tau = inst.prior().tau();
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_input, "tau must be positive");
  if (!(guard > 0.0)) throw Error(ErrorCode::invalid_input, "guard factor must be positive");
  const double base = 20.0 * static_cast<double>(inst.atoms()) / tau;
  return static_cast<long long>(std::ceil(std::pow(base, 1.0 + inst.prior().alpha()) * std::log(base) * guard));
}

double zeros_posterior_mean(const SemibanditInstance& inst, int n, std::size_t j, std::size_t a) {
  if (a >= inst.atoms()) throw Error(ErrorCode::invalid_input, "atom index out of range");
  return a < j ? zeros_mean(inst.prior()[a], n) : inst.prior()[a].mean();
}

std::vector<double> signal_atom_means(const SemibanditInstance& inst, int n, std::size_t j, double q, bool x) {
  const double eps = epsilon_j(inst, n, j);
  std::vector<double> means = inst.prior_means();
  if (j == 0) return means;
  for (std::size_t a = 0; a < j; ++a) {
    const double m = means[a];
    const double mz = zeros_mean(inst.prior()[a], n);
    means[a] = x ? (eps * mz + q * (m - eps * mz)) / (eps + q * (1.0 - eps)) : (m - eps * mz) / (1.0 - eps);
  }
  return means;
}

namespace {

GreedyChoice choice_for(const SemibanditInstance& inst, std::size_t j, const std::vector<double>& means) {
  GreedyChoice c;
  c.action = inst.greedy(means);
  for (int a : inst.action(c.action)) c.has_new_atom = c.has_new_atom || static_cast<std::size_t>(a) >= j;
  return c;
}

}  // namespace

GreedyChoice greedy_after_zeros(const SemibanditInstance& inst, int n, std::size_t j) {
  std::vector<double> means(inst.atoms());
  for (std::size_t a = 0; a < inst.atoms(); ++a) means[a] = zeros_posterior_mean(inst, n, j, a);
  return choice_for(inst, j, means);
}

GreedyChoice greedy_after_signal(const SemibanditInstance& inst, int n, std::size_t j, double q, bool x) {
  return choice_for(inst, j, signal_atom_means(inst, n, j, q, x));
}

AtomOrder sort_atoms(const SemibanditInstance& inst, int n) {
  const std::size_t d = inst.atoms();
  std::vector<int> order;
  std::vector<bool> used(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    // Stage j sees the atoms chosen so far as atoms 0..j-1; the rest keep
    // their relative order.
    std::vector<int> trial = order;
    for (std::size_t a = 0; a < d; ++a)
      if (!used[a]) trial.push_back(static_cast<int>(a));
    const SemibanditInstance view = inst.reordered(trial);
    const GreedyChoice c = greedy_after_zeros(view, n, j);
    int fresh = -1;
    for (int a : view.action(c.action))
      if (static_cast<std::size_t>(a) >= j && (fresh < 0 || trial[static_cast<std::size_t>(a)] < fresh))
        fresh = trial[static_cast<std::size_t>(a)];
    if (fresh < 0)
      throw Error(ErrorCode::precondition_violation,
                  "no consistent atom order: stage " + std::to_string(j) + " greedy action has no new atom");
    order.push_back(fresh);
    used[static_cast<std::size_t>(fresh)] = true;
  }
  return {order, inst.reordered(order)};
}

LikelihoodRatioCheck likelihood_ratio_check(const SemibanditInstance& inst, long long n, std::size_t j) {
  LikelihoodRatioCheck r;
  r.threshold = inst.prior().tau() / (5.0 * static_cast<double>(inst.atoms()));
  r.holds = true;
  for (std::size_t a = 0; a < j && a < inst.atoms(); ++a) {
    const auto& atom = inst.prior()[a];
    const double tail = boost::math::ibetac(atom.a, atom.b + static_cast<double>(n), r.threshold);
    r.worst = std::max(r.worst, tail);
  }
  r.holds = r.worst <= r.threshold;
  return r;
}

std::vector<EpsShapeRow> eps_shape_probe(const std::vector<std::size_t>& dims, const std::vector<int>& samples,
                                         double alpha, double* kappa_out) {
  auto uniform = [&](std::size_t d) {
    std::vector<std::vector<int>> acts;
    for (std::size_t i = 0; i < d; ++i) acts.push_back({static_cast<int>(i)});
    return SemibanditInstance(AtomPrior(std::vector<BetaAtom>(d), alpha), acts);
  };
  auto scale = [&](std::size_t d, int n) {
    return std::pow(static_cast<double>(d), 1.0 + alpha) * std::pow(static_cast<double>(n), alpha);
  };
  const double kappa = -std::log(epsilon_j(uniform(2), 4, 1)) / scale(2, 4);
  if (kappa_out) *kappa_out = kappa;
  std::vector<EpsShapeRow> rows;
  for (auto d : dims)
    for (int n : samples) {
      EpsShapeRow r;
      r.d = d;
      r.n = n;
      r.log_inverse = -std::log(epsilon_j(uniform(d), n, d - 1));
      r.bound = kappa * scale(d, n);
      r.holds = r.log_inverse <= r.bound * (1.0 + 1e-12);
      rows.push_back(r);
    }
  return rows;
}

// Algorithm 1 -------------------------------------------------------------------

const char* to_string(Phase p) {
  switch (p) {
    case Phase::initial: return "initial";
    case Phase::exploit: return "exploit";
    case Phase::padded: return "padded";
  }
  return "initial";
}

std::size_t Algorithm1Spec::padded_recommendation(const Stage& stage, double p_signal, int pick) const {
  const auto row = static_cast<Eigen::Index>(pick < 0 ? stage.game.menu.size() : static_cast<std::size_t>(pick));
  std::size_t best = 0;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < instance.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const double v = p_signal * stage.informed(row, col) + (1.0 - p_signal) * stage.uninformed(row, col);
    if (v > top + 1e-15) {
      top = v;
      best = k;
    }
  }
  return best;
}

json Algorithm1Spec::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages)
    stages_json.push_back({{"j", s.j},
                           {"epsilon", s.epsilon},
                           {"iterations", s.iterations},
                           {"lambda_j", s.solution.value},
                           {"padding", s.solution.policy.padding},
                           {"duality_gap", s.solution.duality_gap},
                           {"exploit_x0", s.exploit_x0},
                           {"exploit_x1", s.exploit_x1}});
  return {{"instance", instance.to_json()}, {"order", order},         {"n", n},
          {"lambda_floor", lambda_floor},   {"lambda", lambda},       {"prior_greedy", prior_greedy},
          {"stages", stages_json},          {"budget", budget},       {"asymptotic_budget", asymptotic_budget}};
}

namespace {

int growth_iterations(double eps, double lambda) {
  return static_cast<int>(std::ceil(std::log(1.0 / eps) / std::log1p(lambda)));
}

}  // namespace

Algorithm1Spec prepare_algorithm1(const SemibanditInstance& inst, int n, double lambda_override) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "N must be at least 1");
  Algorithm1Spec spec;
  AtomOrder sorted = sort_atoms(inst, n);
  spec.instance = sorted.sorted;
  spec.order = sorted.order;
  spec.n = n;
  const auto& in = spec.instance;
  const std::size_t d = in.atoms();
  spec.prior_greedy = in.greedy(in.prior_means());

  spec.lambda_floor = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < d; ++j) {
    Stage st;
    st.j = j;
    st.epsilon = epsilon_j(in, n, j);
    const SignalSpec signal = SignalSpec::finite_uniform(d, j, n);
    Stream unused(0);
    st.game = build_game(in, j, signal, 10, unused);
    if (!st.game.enumerated)
      throw Error(ErrorCode::invalid_input, "stage game too large to enumerate; reduce N");
    st.solution = solve_minimax(st.game);
    st.exploit_x0 = greedy_after_signal(in, n, j, st.epsilon, false).action;
    st.exploit_x1 = greedy_after_signal(in, n, j, st.epsilon, true).action;
    spec.lambda_floor = std::min(spec.lambda_floor, st.solution.policy.total);
    spec.stages.push_back(std::move(st));
  }
  if (d == 1) spec.lambda_floor = 0.0;
  if (d > 1 && !(spec.lambda_floor > 1e-12))
    throw Error(ErrorCode::lift_undefined, "some stage game has value zero");
  spec.lambda = lambda_override > 0.0 ? lambda_override : spec.lambda_floor / (2.0 * static_cast<double>(d));

  const std::vector<double> prior = in.prior_means();
  for (auto& st : spec.stages) {
    const auto& g = st.game;
    const std::size_t M = g.menu.size(), S = g.scenarios();
    st.q.assign(M, 0.0);
    for (std::size_t a = 0; a < M; ++a) st.q[a] = st.solution.policy.padding[a] / st.solution.policy.total;
    st.informed = Mat::Zero(static_cast<Eigen::Index>(M + 1), static_cast<Eigen::Index>(in.size()));
    st.uninformed = Mat::Zero(static_cast<Eigen::Index>(M + 1), static_cast<Eigen::Index>(in.size()));
    for (std::size_t s = 0; s < S; ++s) {
      double rest = 1.0;
      for (std::size_t a = 0; a <= M; ++a) {
        double pr;
        if (a < M) {
          pr = st.solution.policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
          rest -= pr;
        } else {
          pr = std::max(0.0, rest);
        }
        if (pr == 0.0) continue;
        st.informed.row(static_cast<Eigen::Index>(a)) += g.weights[s] * pr * g.values.row(static_cast<Eigen::Index>(s));
      }
    }
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t k = 0; k < in.size(); ++k)
        st.uninformed(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = st.q[a] * in.action_value(k, prior);
    st.iterations = growth_iterations(st.epsilon, spec.lambda);
  }

  spec.budget = n;
  for (const auto& st : spec.stages) spec.budget += static_cast<long long>(n) * (1 + st.iterations);
  spec.asymptotic_budget = std::pow(static_cast<double>(d), 3.0 + in.prior().alpha()) *
                           std::pow(static_cast<double>(n), 1.0 + in.prior().alpha()) /
                           std::max(spec.lambda_floor, 1e-300);
  return spec;
}

namespace {

struct Block {
  Phase phase;
  std::size_t stage;
  int iteration;
  std::size_t action;
  double p;
  int x, b, y, z;
};

// Runs the block structure of Algorithm 1. `emit` plays a block of N steps and
// must leave the first-N success counts of the block's atoms in `first`.
template <class Emit>
void run_blocks(const Algorithm1Spec& spec, Stream& rng, const std::vector<int>& first, Emit&& emit) {
  const auto& in = spec.instance;
  emit(Block{Phase::initial, 0, -1, spec.prior_greedy, 1.0, 0, 0, 0, 0});
  std::vector<int> counts(in.atoms(), 0);
  for (const auto& st : spec.stages) {
    const std::size_t j = st.j;
    double p = st.epsilon;
    const int b0 = rng.bernoulli(p) ? 1 : 0;
    int y = b0;
    bool zeros = true;
    for (std::size_t i = 0; i < j; ++i) zeros = zeros && first[i] == 0;
    const int x = std::max(zeros ? 1 : 0, b0);
    const std::size_t act = x ? st.exploit_x1 : st.exploit_x0;
    emit(Block{Phase::exploit, j, -1, act, p, x, b0, y, 0});
    int iteration = 0;
    while (p < 1.0) {
      const double c = std::min(1.0, p * spec.lambda / (1.0 - p));
      const int b = rng.bernoulli(c) ? 1 : 0;
      const int z = std::max(b, y);
      if (z) {
        const double p_signal = p / (p + (1.0 - p) * c);  // P(y = 1 | z = 1)
        int pick;
        if (y) {
          for (std::size_t i = 0; i < in.atoms(); ++i) counts[i] = i <= j ? first[i] : 0;
          const std::size_t s = st.game.scenario_of(counts);
          std::vector<double> row(st.game.menu.size() + 1);
          double rest = 1.0;
          for (std::size_t a = 0; a < st.game.menu.size(); ++a) {
            row[a] = std::max(0.0, st.solution.policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)));
            rest -= row[a];
          }
          row.back() = std::max(0.0, rest);
          const std::size_t k = rng.categorical(row);
          pick = k < st.game.menu.size() ? static_cast<int>(k) : -1;
        } else {
          pick = static_cast<int>(rng.categorical(st.q));
        }
        const std::size_t rec = spec.padded_recommendation(st, p_signal, pick);
        emit(Block{Phase::padded, j, iteration, rec, p, 0, b, y, z});
      } else {
        emit(Block{Phase::exploit, j, iteration, spec.prior_greedy, p, 0, b, y, z});
      }
      y = z;
      p = std::min(1.0, p * (1.0 + spec.lambda));
      ++iteration;
    }
  }
}

}  // namespace

ExplorationTranscript run_algorithm1(const Algorithm1Spec& spec, Stream& rng) {
  const auto& in = spec.instance;
  const std::size_t d = in.atoms();
  if (spec.stages.size() + 1 != d) throw Error(ErrorCode::invalid_input, "missing stage policy");
  ExplorationTranscript tr;
  tr.n = spec.n;
  tr.budget = spec.budget;
  tr.theta.resize(d);
  for (std::size_t i = 0; i < d; ++i) tr.theta[i] = rng.beta(in.prior()[i].a, in.prior()[i].b);
  tr.counts.assign(d, 0);
  tr.first_successes.assign(d, 0);
  tr.iterations.assign(spec.stages.size(), 0);
  std::vector<int> first(d, 0);
  Stream feedback_rng = rng.split(1);
  long long time = 0;
  auto play = [&](const Block& blk) {
    for (int k = 0; k < spec.n; ++k) {
      StepRecord rec;
      rec.time = ++time;
      rec.phase = blk.phase;
      rec.stage = blk.stage;
      rec.action = blk.action;
      rec.p = blk.p;
      rec.x = blk.x;
      rec.b = blk.b;
      rec.y = blk.y;
      rec.z = blk.z;
      for (int a : in.action(blk.action)) {
        const auto ai = static_cast<std::size_t>(a);
        const int bit = feedback_rng.bernoulli(tr.theta[ai]) ? 1 : 0;
        rec.feedback.push_back(bit);
        if (tr.counts[ai] < spec.n) tr.first_successes[ai] += bit;
        ++tr.counts[ai];
      }
      tr.steps.push_back(std::move(rec));
    }
    if (blk.phase != Phase::initial && blk.iteration >= 0)
      tr.iterations[blk.stage - 1] = std::max(tr.iterations[blk.stage - 1], blk.iteration + 1);
  };
  run_blocks(spec, rng, first, [&](const Block& blk) {
    play(blk);
    for (std::size_t i = 0; i < d; ++i) first[i] = tr.first_successes[i];
  });
  return tr;
}

std::vector<double> ExplorationTranscript::first_means() const {
  std::vector<double> m(first_successes.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = counts[i] >= n ? static_cast<double>(first_successes[i]) / n
                                 : std::numeric_limits<double>::quiet_NaN();
  return m;
}

bool ExplorationTranscript::counters_consistent(const SemibanditInstance& inst) const {
  std::vector<long long> recount(inst.atoms(), 0);
  std::vector<int> successes(inst.atoms(), 0);
  for (const auto& s : steps) {
    const auto& act = inst.action(s.action);
    if (s.feedback.size() != act.size()) return false;
    for (std::size_t k = 0; k < act.size(); ++k) {
      const auto a = static_cast<std::size_t>(act[k]);
      if (recount[a] < n) successes[a] += s.feedback[k];
      ++recount[a];
    }
  }
  return recount == counts && successes == first_successes;
}

std::string ExplorationTranscript::csv(const SemibanditInstance& inst) const {
  std::ostringstream out;
  out << "time,phase,stage,action,feedback,p_j,x,b,y,z\n";
  for (const auto& s : steps) {
    out << s.time << ',' << to_string(s.phase) << ',' << s.stage << ',';
    const auto& act = inst.action(s.action);
    for (std::size_t k = 0; k < act.size(); ++k) out << (k ? ";" : "") << act[k];
    out << ',';
    for (std::size_t k = 0; k < s.feedback.size(); ++k) out << (k ? ";" : "") << s.feedback[k];
    out << ',' << format_double(s.p) << ',' << s.x << ',' << s.b << ',' << s.y << ',' << s.z << '\n';
  }
  return out.str();
}

// Transcript audit -------------------------------------------------------------

namespace {

struct AuditAcc {
  std::vector<Moments> margin;  // block x action x alternative
  std::vector<Moments> freq;    // block x action
  void merge(const AuditAcc& o) {
    for (std::size_t i = 0; i < margin.size(); ++i) margin[i].merge(o.margin[i]);
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i].merge(o.freq[i]);
  }
};

}  // namespace

TranscriptAudit audit_transcript_bic(const Algorithm1Spec& spec, std::size_t replications, std::uint64_t seed,
                                     int jobs, double z) {
  const auto& in = spec.instance;
  const std::size_t d = in.atoms(), A = in.size();
  std::size_t blocks = 1;
  std::vector<Block> labels{Block{Phase::initial, 0, -1, 0, 1.0, 0, 0, 0, 0}};
  for (const auto& st : spec.stages) {
    blocks += 1 + static_cast<std::size_t>(st.iterations);
    labels.push_back(Block{Phase::exploit, st.j, -1, 0, st.epsilon, 0, 0, 0, 0});
    for (int it = 0; it < st.iterations; ++it) labels.push_back(Block{Phase::padded, st.j, it, 0, 0.0, 0, 0, 0, 0});
  }
  AuditAcc zero{std::vector<Moments>(blocks * A * A), std::vector<Moments>(blocks * A)};
  const AuditAcc acc = replicate(seed, replications, static_cast<unsigned>(std::max(jobs, 0)), zero,
                                 [&](std::size_t, Stream& rng, AuditAcc& g) {
    std::vector<double> theta(d);
    for (std::size_t i = 0; i < d; ++i) theta[i] = rng.beta(in.prior()[i].a, in.prior()[i].b);
    std::vector<double> value(A);
    for (std::size_t k = 0; k < A; ++k) value[k] = in.action_value(k, theta);
    std::vector<int> first(d, 0);
    std::vector<bool> seen(d, false);
    std::size_t c = 0;
    run_blocks(spec, rng, first, [&](const Block& blk) {
      if (c >= blocks) throw Error(ErrorCode::solver_error, "block count exceeds the budget");
      for (int a : in.action(blk.action)) {
        const auto ai = static_cast<std::size_t>(a);
        if (!seen[ai]) {
          seen[ai] = true;
          first[ai] = rng.binomial(spec.n, theta[ai]);
        }
      }
      for (std::size_t k = 0; k < A; ++k) {
        const bool hit = k == blk.action;
        g.freq[c * A + k].add(hit ? 1.0 : 0.0);
        for (std::size_t k2 = 0; k2 < A; ++k2)
          if (k2 != k) g.margin[(c * A + k) * A + k2].add(hit ? value[k] - value[k2] : 0.0);
      }
      ++c;
    });
  });

  TranscriptAudit rep;
  rep.replications = replications;
  rep.z = z;
  const double floor = 10.0 / static_cast<double>(replications);
  for (std::size_t c = 0; c < blocks; ++c)
    for (std::size_t k = 0; k < A; ++k)
      for (std::size_t k2 = 0; k2 < A; ++k2) {
        if (k2 == k) continue;
        BlockMarginRow r;
        r.block = c;
        r.kind = labels[c].phase == Phase::initial ? "initial" : labels[c].iteration < 0 ? "stage-start" : "loop";
        r.stage = labels[c].stage;
        r.iteration = labels[c].iteration;
        r.action = k;
        r.alternative = k2;
        const Moments& m = acc.margin[(c * A + k) * A + k2];
        r.margin = m.mean();
        r.se = m.standard_error();
        r.frequency = acc.freq[c * A + k].mean();
        r.under_sampled = r.frequency < floor;
        r.certified = r.under_sampled || r.margin >= -z * r.se;
        if (r.under_sampled) ++rep.under_sampled;
        rep.all_certified = rep.all_certified && r.certified;
        rep.rows.push_back(r);
      }
  return rep;
}

std::string TranscriptAudit::csv() const {
  std::ostringstream out;
  out << "block,kind,stage,iteration,action,alternative,margin,se,frequency,under_sampled,certified\n";
  for (const auto& r : rows)
    out << r.block << ',' << r.kind << ',' << r.stage << ',' << r.iteration << ',' << r.action << ','
        << r.alternative << ',' << format_double(r.margin) << ',' << format_double(r.se) << ','
        << format_double(r.frequency) << ',' << (r.under_sampled ? 1 : 0) << ',' << (r.certified ? 1 : 0) << '\n';
  return out.str();
}

json TranscriptAudit::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"block", r.block},         {"kind", r.kind}, {"stage", r.stage},
                         {"iteration", r.iteration}, {"action", r.action},          {"alternative", r.alternative},
                         {"margin", r.margin},       {"se", r.se},                  {"frequency", r.frequency},
                         {"under_sampled", r.under_sampled}, {"certified", r.certified}});
  return {{"rows", rows_json},        {"replications", replications}, {"z", z},
          {"all_certified", all_certified}, {"under_sampled", under_sampled}};
}

}  // namespace biclab
