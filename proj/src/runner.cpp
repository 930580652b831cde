#include "biclab/runner.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "biclab/bic_audit.hpp"
#include "biclab/errors.hpp"
#include "biclab/parallel.hpp"
#include "biclab/recgame.hpp"
#include "biclab/semibandit.hpp"

namespace biclab {

namespace fs = std::filesystem;

// Config -------------------------------------------------------------------------

json ExperimentConfig::to_json() const {
  return {{"kind", kind}, {"instance", instance}, {"replications", replications}, {"seed", seed},
          {"jobs", jobs}, {"out", out},           {"params", params}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.kind = j.at("kind").get<std::string>();
    c.instance = j.value("instance", std::string{});
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    c.out = j.value("out", c.out);
    c.params = j.value("params", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("bad config: ") + e.what());
  }
  if (!known_kind(c.kind)) throw Error(ErrorCode::invalid_input, "unknown experiment kind '" + c.kind + "'");
  if (c.replications < 1) throw Error(ErrorCode::invalid_input, "replications must be at least 1");
  if (!c.params.is_object()) throw Error(ErrorCode::invalid_input, "params must be an object");
  return c;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_input, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_input, "cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_json(read_json_file(path)); }

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("jobs");
  j.erase("out");
  return fnv1a_hex(dump_json(j));
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"bic-audit",          "corollary",  "counterexample-1",
                                              "counterexample-2",   "glm-audit",  "semibandit-explore",
                                              "game-solve",         "game-sweep", "reduce"};
  return kinds;
}

bool known_kind(const std::string& kind) {
  for (const auto& k : experiment_kinds())
    if (k == kind) return true;
  return false;
}

std::string resolve_kind(const std::string& word, const std::string& variant) {
  if (variant.empty()) return known_kind(word) ? word : "";
  const std::string key = word + " " + variant;
  if (key == "audit bic") return "bic-audit";
  if (key == "audit corollary") return "corollary";
  if (key == "audit glm") return "glm-audit";
  if (key == "counterexample one" || key == "counterexample 1") return "counterexample-1";
  if (key == "counterexample two" || key == "counterexample 2") return "counterexample-2";
  if (key == "semibandit explore") return "semibandit-explore";
  if (key == "game solve") return "game-solve";
  if (key == "game sweep") return "game-sweep";
  if (key == "reduce extreme-points") return "reduce";
  return "";
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("BICLAB_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || *v == '-') return std::nullopt;
  return static_cast<std::uint64_t>(x);
}

// Experiments ------------------------------------------------------------------------

namespace {

struct Context {
  const ExperimentConfig& config;
  json params;
  fs::path dir;
  RunOutcome outcome;

  void emit(const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    outcome.files.push_back(name);
  }
  void fail(const std::string& what) { outcome.failures.push_back(what); }
};

template <class T>
T param(const json& p, const char* key, T fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("parameter '") + key + "': " + e.what());
  }
}

// Smallest γ with γ >= threshold(t = dγ + offset), by fixed-point iteration.
int spectral_gamma(int d, double r, double eps, double C, int offset) {
  int gamma = 1;
  for (int it = 0; it < 200; ++it) {
    const int next = std::max(1, static_cast<int>(std::ceil(gamma_threshold(d, d * gamma + offset, r, eps, C))));
    if (next <= gamma) return gamma;
    gamma = next;
  }
  throw Error(ErrorCode::iteration_limit, "spectral gamma fixed point did not settle");
}

void run_bic_audit(Context& ctx) {
  const json& p = ctx.params;
  LinearAuditConfig cfg;
  cfg.prior = p.contains("prior") ? LinearPrior::from_json(p["prior"])
                                  : LinearPrior::uniform(ConvexBody::ball(2, 1.0, 1.0));
  cfg.actions = p.contains("actions") ? ActionSet::from_json(p["actions"]) : circle_actions(8);
  cfg.obs = p.contains("obs") ? ObsModel::from_json(p["obs"]) : ObsModel{ObsKind::gaussian, 1.0};
  const int d = cfg.prior.dim();
  if (cfg.actions.dim() != d) throw Error(ErrorCode::invalid_input, "actions and prior differ in dimension");
  if (p.contains("C")) {
    const double C = p["C"].get<double>();
    double eps = separation(cfg.actions);
    const double r = param(p, "r", 1.0);
    const int gamma = spectral_gamma(d, r, eps, C, 1);
    cfg.times = {d * gamma + 1, d * gamma + 50};
    ctx.outcome.results["gamma"] = gamma;
  }
  cfg.times = param(p, "times", cfg.times);
  for (int t : cfg.times)
    if (t < 1) throw Error(ErrorCode::invalid_input, "times must be positive");
  const int horizon = *std::max_element(cfg.times.begin(), cfg.times.end());
  if (p.contains("schedule")) {
    cfg.schedule.kind = PolicySpec::Kind::schedule;
    cfg.schedule.schedule = p["schedule"].get<std::vector<std::size_t>>();
    if (cfg.schedule.schedule.size() + 1 < static_cast<std::size_t>(horizon))
      throw Error(ErrorCode::invalid_input, "schedule shorter than the largest audited time");
  } else {
    // Round robin over the actions closest to e_1, ..., e_d.
    std::vector<std::size_t> axis(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      Vec e = Vec::Zero(d);
      e[i] = 1.0;
      axis[static_cast<std::size_t>(i)] = best_action(cfg.actions, e);
    }
    cfg.schedule.kind = PolicySpec::Kind::schedule;
    for (int s = 0; s < horizon; ++s) cfg.schedule.schedule.push_back(axis[static_cast<std::size_t>(s % d)]);
  }
  cfg.pairs = param(p, "pairs", cfg.pairs);
  cfg.n_inner = param(p, "n_inner", std::size_t{200});
  cfg.z = param(p, "z", kCertifyZ);
  cfg.replications = ctx.config.replications;
  cfg.seed = ctx.config.seed;
  cfg.jobs = ctx.config.jobs;
  cfg.config_hash = ctx.config.hash();
  const BicReport rep = estimate_bic_margin(cfg);
  ctx.emit("margins.csv", rep.csv());
  ctx.outcome.results["report"] = rep.to_json();
  for (const auto& r : rep.rows)
    if (!r.certified)
      ctx.fail("t=" + std::to_string(r.t) + " i=" + std::to_string(r.i) + " j=" + std::to_string(r.j) +
               " margin=" + format_double(r.margin) + " se=" + format_double(r.se));
}

void run_corollary(Context& ctx) {
  const json& p = ctx.params;
  const ConvexBody body = p.contains("body") ? ConvexBody::from_json(p["body"]) : ConvexBody::ball(2, 1.0, 1.0);
  const ActionSet actions = p.contains("actions") ? ActionSet::from_json(p["actions"]) : cross_polytope_actions(2);
  const CorollaryReport rep =
      audit_corollary_margins(body, actions, ctx.config.replications, ctx.config.seed, ctx.config.jobs);
  ctx.emit("corollary.csv", rep.csv());
  ctx.outcome.results["report"] = rep.to_json();
  for (const auto& r : rep.rows)
    if (!r.bound_holds) ctx.fail("action " + std::to_string(r.i) + " probability below (r eps/4)^d");
}

void run_counterexample_one(Context& ctx) {
  const auto rep = run_counterexample_1(ctx.config.replications, ctx.config.seed, ctx.config.jobs);
  ctx.outcome.results["report"] = rep.to_json();
  if (!rep.positive) ctx.fail("margin not positive at 99%: " + format_double(rep.margin));
  if (!rep.third_case_zero) ctx.fail("A3 sub-case margin not zero: " + format_double(rep.sub_margin[2]));
}

void run_counterexample_two(Context& ctx) {
  const auto dims = param(ctx.params, "dims", std::vector<int>{10, 20, 40, 80});
  const auto rep = decay_probe_counterexample_2(dims, ctx.config.replications, ctx.config.seed, ctx.config.jobs);
  ctx.emit("decay.csv", rep.csv());
  ctx.outcome.results["report"] = rep.to_json();
  if (!rep.passes)
    ctx.fail("decay fit slope=" + format_double(rep.fit.slope) + " r2=" + format_double(rep.fit.r_squared));
}

void run_glm(Context& ctx) {
  GlmProbeConfig cfg;
  cfg.dim = param(ctx.params, "dim", cfg.dim);
  cfg.C = param(ctx.params, "C", cfg.C);
  cfg.delta = param(ctx.params, "delta", cfg.delta);
  cfg.replications = ctx.config.replications;
  cfg.seed = ctx.config.seed;
  cfg.jobs = ctx.config.jobs;
  const auto r = glm_concentration_probe(cfg);
  ctx.outcome.results["report"] = {{"gamma", r.gamma},           {"radius_factor", r.radius_factor},
                                   {"frequency", r.frequency},   {"standard_error", r.standard_error},
                                   {"nonconverged", r.nonconverged}, {"max_residual", r.max_residual},
                                   {"passes", r.passes}};
  if (!r.passes) ctx.fail("exceedance frequency " + format_double(r.frequency) + " above delta + 3 SE");
  if (r.max_residual > 1e-10) ctx.fail("score residual " + format_double(r.max_residual));
}

SemibanditInstance semibandit_instance(const Context& ctx) {
  if (!ctx.params.contains("atoms")) throw Error(ErrorCode::invalid_input, "semibandit instance missing 'atoms'");
  return SemibanditInstance::from_json(ctx.params);
}

void run_semibandit(Context& ctx) {
  const SemibanditInstance inst = semibandit_instance(ctx);
  const double guard = param(ctx.params, "guard", 1e-3);
  const long long n_ll = ctx.params.contains("N") ? ctx.params["N"].get<long long>() : n_lower_bound(inst, guard);
  if (n_ll < 1 || n_ll > 1000000) throw Error(ErrorCode::invalid_input, "N out of range");
  const int n = static_cast<int>(n_ll);
  const Algorithm1Spec spec = prepare_algorithm1(inst, n, param(ctx.params, "lambda", 0.0));
  const std::size_t runs = param(ctx.params, "runs", std::size_t{100});
  json run_rows = json::array();
  std::size_t ok = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    Stream rng = derive_stream(mix64(ctx.config.seed) ^ 0x5eedu, r);
    const auto tr = run_algorithm1(spec, rng);
    long long min_count = *std::min_element(tr.counts.begin(), tr.counts.end());
    const bool good = min_count >= n && static_cast<long long>(tr.steps.size()) <= spec.budget &&
                      tr.counters_consistent(spec.instance);
    ok += good ? 1 : 0;
    run_rows.push_back({{"run", r}, {"steps", tr.steps.size()}, {"min_count", min_count}, {"ok", good}});
    if (r == 0) ctx.emit("transcript.csv", tr.csv(spec.instance));
  }
  const auto audit = audit_transcript_bic(spec, ctx.config.replications, ctx.config.seed,
                                          static_cast<int>(ctx.config.jobs));
  ctx.emit("audit.csv", audit.csv());
  ctx.outcome.results["setup"] = spec.to_json();
  ctx.outcome.results["runs"] = run_rows;
  ctx.outcome.results["runs_ok"] = ok;
  ctx.outcome.results["audit"] = audit.to_json();
  const auto lr = likelihood_ratio_check(inst, n_lower_bound(inst, 1.0), inst.atoms() - 1);
  ctx.outcome.results["likelihood_ratio"] = {{"threshold", lr.threshold}, {"worst", lr.worst}, {"holds", lr.holds}};
  if (ok != runs) ctx.fail(std::to_string(runs - ok) + " runs violated counters or budget");
  if (!audit.all_certified) ctx.fail("transcript audit found a negative margin");
  if (!lr.holds) ctx.fail("likelihood-ratio bound fails at full N");
}

SignalSpec signal_from(const json& p, const SemibanditInstance& inst, std::size_t j) {
  if (!p.contains("samples")) return SignalSpec::infinite();
  const json& s = p["samples"];
  if (s.is_string()) {
    if (s == "infinite") return SignalSpec::infinite();
    if (s == "easy") return SignalSpec::easy();
    throw Error(ErrorCode::invalid_input, "samples must be an integer, 'infinite' or 'easy'");
  }
  return SignalSpec::finite_uniform(inst.atoms(), j, s.get<int>());
}

void run_game_solve(Context& ctx) {
  const SemibanditInstance inst = semibandit_instance(ctx);
  const std::size_t j = param(ctx.params, "j", std::size_t{1});
  const std::size_t scenarios = param(ctx.params, "scenarios", std::size_t{10000});
  Stream rng = derive_stream(ctx.config.seed, 0);
  const GameSpec game = build_game(inst, j, signal_from(ctx.params, inst, j), scenarios, rng);
  const GameSolution sol = solve_minimax(game);
  const auto cert = verify_padding(sol.policy, game);
  ctx.emit("game.json", dump_json(game.to_json()));
  ctx.emit("policy.json", dump_json(sol.policy.to_json()));
  ctx.outcome.results["lambda"] = sol.value;
  ctx.outcome.results["se"] = sol.se;
  ctx.outcome.results["duality_gap"] = sol.duality_gap;
  ctx.outcome.results["padding"] = sol.policy.padding;
  ctx.outcome.results["certificate"] = {{"max_deviation", cert.max_deviation}, {"passes", cert.passes}};
  ctx.outcome.results["agent"] = to_json(sol.agent);
  if (!cert.passes) ctx.fail("padding certificate deviation " + format_double(cert.max_deviation));
  if (std::abs(sol.duality_gap) > 1e-8) ctx.fail("duality gap " + format_double(sol.duality_gap));
}

void run_game_sweep(Context& ctx) {
  const SemibanditInstance inst = semibandit_instance(ctx);
  const std::size_t j = param(ctx.params, "j", std::size_t{1});
  const std::size_t scenarios = param(ctx.params, "scenarios", std::size_t{10000});
  const auto ns = param(ctx.params, "samples", std::vector<int>{0, 1, 2, 4, 8, 16, 32, 64, 128, 256});
  const double kappa = param(ctx.params, "kappa", 1.0);
  // Every cell shares the infinite-sample game so the curve is comparable.
  std::vector<GapResult> rows;
  for (int n : ns) {
    Stream rng = derive_stream(ctx.config.seed, 0);
    rows.push_back(finite_sample_gap(inst, j, n, scenarios, rng, kappa));
  }
  ctx.emit("sweep.csv", sweep_csv(rows, j));
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"N", r.n}, {"lambda", r.value}, {"se", r.se}, {"lambda_inf", r.infinite_value},
                   {"se_inf", r.infinite_se}, {"hypothesis", r.hypothesis}, {"holds", r.holds}});
    if (!r.holds) ctx.fail("N=" + std::to_string(r.n) + " below half the infinite-sample value");
  }
  ctx.outcome.results["sweep"] = arr;
}

void run_reduce(Context& ctx) {
  const int d = param(ctx.params, "dim", 3);
  const int horizon = param(ctx.params, "horizon", 20);
  const BiasedPolytope poly = biased_polytope(d);
  const ConvexBody ball = ConvexBody::ball(d, 1.0, 1.0);
  struct Acc {
    std::size_t dominated = 0, total = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    void merge(const Acc& o) {
      dominated += o.dominated;
      total += o.total;
      worst_gap = std::min(worst_gap, o.worst_gap);
    }
  };
  const Acc acc = replicate(ctx.config.seed, ctx.config.replications, ctx.config.jobs, Acc{},
                            [&](std::size_t, Stream& rng, Acc& a) {
    const Vec l_star = sample_uniform(ball, rng);
    std::vector<Vec> inner;
    std::vector<double> w(poly.vertices.size());
    for (int s = 0; s < horizon; ++s) {
      double sum = 0.0;
      for (auto& x : w) sum += (x = -std::log(rng.uniform_open()));
      Vec point = Vec::Zero(d);
      for (std::size_t k = 0; k < w.size(); ++k) point += (w[k] / sum) * poly.vertices[k];
      inner.push_back(point);
    }
    const WrapResult wr = simulate_extreme_point_wrapper(poly.vertices, inner, l_star, rng);
    a.dominated += wr.dominates ? 1 : 0;
    a.total += 1;
    a.worst_gap = std::min(a.worst_gap, wr.gram_gap);
  });
  ctx.outcome.results["dominated"] = acc.dominated;
  ctx.outcome.results["episodes"] = acc.total;
  ctx.outcome.results["worst_gram_gap"] = acc.worst_gap;
  ctx.outcome.results["vertices"] = poly.vertices.size();
  if (acc.dominated != acc.total)
    ctx.fail(std::to_string(acc.total - acc.dominated) + " episodes lost spectral exploration");
}

}  // namespace

RunOutcome run(const ExperimentConfig& config) {
  if (!known_kind(config.kind)) throw Error(ErrorCode::invalid_input, "unknown experiment kind '" + config.kind + "'");
  if (config.replications < 1) throw Error(ErrorCode::invalid_input, "replications must be at least 1");
  json params = config.instance.empty() ? json::object() : read_json_file(config.instance);
  if (!params.is_object()) throw Error(ErrorCode::invalid_input, "instance file must hold a JSON object");
  params.update(config.params);

  const auto start = std::chrono::steady_clock::now();
  Context ctx{config, params, fs::path(config.out), {}};
  fs::create_directories(ctx.dir);
  ctx.outcome.results = json::object();

  const std::string& k = config.kind;
  if (k == "bic-audit") run_bic_audit(ctx);
  else if (k == "corollary") run_corollary(ctx);
  else if (k == "counterexample-1") run_counterexample_one(ctx);
  else if (k == "counterexample-2") run_counterexample_two(ctx);
  else if (k == "glm-audit") run_glm(ctx);
  else if (k == "semibandit-explore") run_semibandit(ctx);
  else if (k == "game-solve") run_game_solve(ctx);
  else if (k == "game-sweep") run_game_sweep(ctx);
  else run_reduce(ctx);

  ctx.outcome.exit_code = ctx.outcome.failures.empty() ? 0 : 1;
  json results = {{"kind", k},          {"seed", config.seed},          {"config_hash", config.hash()},
                  {"passes", ctx.outcome.exit_code == 0}, {"failures", ctx.outcome.failures},
                  {"results", ctx.outcome.results}};
  ctx.emit("results.json", dump_json(results));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"config", config.to_json()},  {"config_hash", config.hash()}, {"seed", config.seed},
                   {"version", kVersion},         {"wall_seconds", wall},         {"files", ctx.outcome.files},
                   {"exit_code", ctx.outcome.exit_code}};
  write_file(ctx.dir / "manifest.json", dump_json(manifest));
  return ctx.outcome;
}

int run_and_report(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const RunOutcome o = run(config);
    out << config.kind << ": " << (o.exit_code == 0 ? "pass" : "FAIL") << " (" << config.out << ")\n";
    for (const auto& f : o.failures) err << "  failing: " << f << '\n';
    return o.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::invalid_input ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace biclab
