#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biclab/errors.hpp"
#include "biclab/runner.hpp"

using namespace biclab;

namespace {

std::string kinds_list() {
  std::string s;
  for (const auto& k : experiment_kinds()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian incentive-compatible exploration lab"};
  std::vector<std::string> words;
  std::string config_path, out_dir, instance;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::size_t replications = 0;
  std::vector<std::string> sets;
  app.add_option("kind", words, "experiment kind, e.g. counterexample-1 or 'game solve'")->required()->expected(1, 2);
  app.add_option("--config", config_path, "experiment config JSON");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (BICLAB_SEED also overrides)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads; results do not depend on it");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* reps_opt = app.add_option("--replications", replications, "number of replications");
  app.add_option("--instance", instance, "instance JSON merged into the parameters");
  app.add_option("--set", sets, "parameter override key=json-value (repeatable)");
  std::string j_arg, samples_arg;
  app.add_option("--j", j_arg, "atom index for game kinds");
  app.add_option("--samples", samples_arg, "samples per atom for game kinds (integer, infinite, easy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string kind = resolve_kind(words[0], words.size() > 1 ? words[1] : "");
  if (kind.empty()) {
    std::cerr << "unknown experiment kind; expected one of: " << kinds_list() << '\n';
    return 2;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config = ExperimentConfig::load(config_path);
      if (config.kind != kind) {
        std::cerr << "config kind '" << config.kind << "' does not match '" << kind << "'\n";
        return 2;
      }
    } else {
      config.kind = kind;
    }
    if (!instance.empty()) config.instance = instance;
    if (*seed_opt) config.seed = seed;
    if (auto env = seed_from_env()) config.seed = *env;
    if (*jobs_opt) config.jobs = jobs;
    if (*out_opt) config.out = out_dir;
    if (*reps_opt) config.replications = replications;
    if (!j_arg.empty()) config.params["j"] = json::parse(j_arg);
    if (!samples_arg.empty())
      config.params["samples"] = (samples_arg == "infinite" || samples_arg == "easy") ? json(samples_arg)
                                                                                    : json::parse(samples_arg);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "--set expects key=value, got '" << s << "'\n";
        return 2;
      }
      config.params[s.substr(0, eq)] = json::parse(s.substr(eq + 1));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: bad JSON value: " << e.what() << '\n';
    return 2;
  }
  return run_and_report(config, std::cout, std::cerr);
}
