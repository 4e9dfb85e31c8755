#pragma once

// Batch experiment runner behind the command-line tool.  A config (JSON file
// and/or flag overrides) names a problem, a method list, and output knobs;
// the commands run the solvers and serialize traces as CSV plus a summary
// JSON.  Everything is deterministic: the same config produces byte-identical
// files.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "symkry/linops.hpp"
#include "symkry/synth.hpp"
#include "symkry/vec.hpp"

namespace symkry {

enum class ProblemKind { Synth, Poisson, File };

// Off-center square from the manufactured PDE study: u(x, y) = sin(sqrt(x^2 +
// y^2)) is not smooth at the origin, so the grid is shifted to keep every
// node away from it.
inline constexpr std::array<double, 4> kOffCenterDomain = {
    -10.0 + 1e-3, 10.0 + 1e-3, -10.0 + 1e-3, 10.0 + 1e-3};

struct PoissonSpec {
  int grid_n = 32;
  std::array<double, 4> domain = kOffCenterDomain;
};

struct FileSpec {
  std::string path;      // Matrix Market file defining the operator
  std::string rhs_path;  // optional: whitespace-separated values, one per row
};

struct ExperimentConfig {
  ProblemKind kind = ProblemKind::Synth;
  synth::SynthSpec synth;
  PoissonSpec poisson;
  FileSpec file;
  std::vector<std::string> methods;  // subset of cg, cr, minres, cg-pis, cr-pis
  double tol = 1e-8;
  int max_iter = 0;  // 0: problem dimension
  bool record_vectors = false;
  std::string output_dir = ".";
  std::uint64_t seed = 0;  // rhs generation for file problems without rhs_path
};

// Parsing and validation.  Throws std::runtime_error with a message naming
// the offending field; the CLI maps that to exit code 1.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
void validate_config(const ExperimentConfig& config);

// Flag overrides, applied after the file (if any) is loaded.
//   --problem  "synth:d=10,m=3,family=psd,seed=42" | "poisson:n=64"
//              | "file:/path/to/matrix.mtx"
//   --methods  "cg,cr,minres"
void apply_problem_override(ExperimentConfig& config, const std::string& spec);
void apply_methods_override(ExperimentConfig& config, const std::string& csv);
// Seed override reaches both the synth generator and the file-rhs stream.
void apply_seed_override(ExperimentConfig& config, std::uint64_t seed);

// Manufactured Poisson-Neumann case: -lap(u) = f with flux data g, on an
// off-center domain.  The flux callback is side-aware and averages the two
// side fluxes at corners, which is what the assembly's corner weighting
// expects.
double poisson_truth_u(double x, double y);
double poisson_source_f(double x, double y);
std::function<double(double, double)> poisson_flux_g(const std::array<double, 4>& domain);
PoissonProblem build_poisson_case(int grid_n, const std::array<double, 4>& domain);

// Sampled truth with its mean removed: under pure Neumann boundaries the
// solution is defined only up to constants.
Vec poisson_truth_vector(const PoissonProblem& problem);

// || (x - mean(x)) - t || / || t || where t is already mean-free.
double mean_adjusted_rel_error(const Vec& x, const Vec& truth_mean_removed);

struct BuiltProblem {
  std::unique_ptr<SymmetricOperator> op;
  Vec b;
  std::optional<Vec> truth;  // mean-removed sampled truth (Poisson only)
  std::string label;
};

BuiltProblem build_problem(const ExperimentConfig& config);

// Commands.  Exit codes: 0 clean, 1 I/O or validation failure, 2 a method
// stopped at a zero-curvature direction.
int cmd_solve(const ExperimentConfig& config);
int cmd_compare(const ExperimentConfig& config);      // needs cr and minres
int cmd_instability(const ExperimentConfig& config);  // synth problems only

}  // namespace symkry
