// Command-line front end.  Subcommands take an optional JSON config file plus
// flag overrides; see the README for the config schema and output layout.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "symkry/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string problem;
  std::string methods;
  double tol = 0.0;
  int max_iter = 0;
  std::uint64_t seed = 0;
  std::string out;

  CLI::Option* problem_opt = nullptr;
  CLI::Option* methods_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* max_iter_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* record_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common_flags(CLI::App* sub, CommonFlags& f) {
  sub->add_option("config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  f.problem_opt = sub->add_option(
      "--problem", f.problem,
      "problem spec: synth:d=10,m=3,family=psd,seed=42 | poisson:n=64 | file:PATH");
  f.methods_opt = sub->add_option("--methods", f.methods,
                                  "comma-separated subset of cg,cr,minres,cg-pis,cr-pis");
  f.tol_opt = sub->add_option("--tol", f.tol, "relative termination tolerance");
  f.max_iter_opt = sub->add_option("--max-iter", f.max_iter, "iteration cap (0: dimension)");
  f.seed_opt = sub->add_option("--seed", f.seed, "seed for generated matrices and right-hand sides");
  f.record_opt = sub->add_flag("--record-vectors", "store per-iteration vectors in the trace");
  f.out_opt = sub->add_option("--out", f.out, "output directory");
}

symkry::ExperimentConfig build_config(const CommonFlags& f,
                                      const std::vector<std::string>& default_methods) {
  symkry::ExperimentConfig config;
  if (!f.config_path.empty()) config = symkry::load_config_file(f.config_path);
  if (f.problem_opt->count() > 0) symkry::apply_problem_override(config, f.problem);
  if (f.methods_opt->count() > 0) symkry::apply_methods_override(config, f.methods);
  if (f.tol_opt->count() > 0) config.tol = f.tol;
  if (f.max_iter_opt->count() > 0) config.max_iter = f.max_iter;
  if (f.seed_opt->count() > 0) symkry::apply_seed_override(config, f.seed);
  if (f.record_opt->count() > 0) config.record_vectors = true;
  if (f.out_opt->count() > 0) config.output_dir = f.out;
  if (config.methods.empty()) config.methods = default_methods;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov solvers for symmetric systems, including singular and inconsistent ones"};
  app.require_subcommand(1);

  CommonFlags solve_flags, compare_flags, instability_flags;
  CLI::App* solve = app.add_subcommand("solve", "run each method; write trace CSVs and summary.json");
  add_common_flags(solve, solve_flags);
  CLI::App* compare = app.add_subcommand(
      "compare", "run cr and minres; write the per-iteration iterate gap CSV");
  add_common_flags(compare, compare_flags);
  CLI::App* instability = app.add_subcommand(
      "instability", "run cg capped at the grade; write trace and stability metrics");
  add_common_flags(instability, instability_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return symkry::cmd_solve(build_config(solve_flags, {"cg", "cr", "minres"}));
    if (compare->parsed())
      return symkry::cmd_compare(build_config(compare_flags, {"cr", "minres"}));
    if (instability->parsed())
      return symkry::cmd_instability(build_config(instability_flags, {"cg"}));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
