#pragma once

// Post-hoc health metrics for finished runs.  Everything here works off the
// recorded trace and a fresh operator handle; nothing feeds back into the
// recurrences, so measuring a run cannot change it.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "symkry/solvers.hpp"

namespace symkry {

// Per-iteration record as serialized to CSV.
struct IterationRecord {
  int k = 0;
  double rel_r = 0;
  double rel_Ar = 0;
  double rel_Ap = 0;
  double curvature = 0;
  double residual_gap = 0;
  std::optional<double> error_vs_truth;
};

// Orthogonality and conjugacy decay, one value per iteration prefix:
//   CG:           ortho_loss[k] = || I - Rh^T Rh ||_2 over normalized residual
//                 columns r_0..r_k; conj_loss[k] = || diag(<p_i, A p_i>) -
//                 P^T A P ||_2 over raw direction columns.
//   CR / MINRES:  ortho_loss[k] uses normalized A p_i columns (for MINRES the
//                 update directions stand in for p); conj_loss[k] =
//                 || diag(<r_i, A r_i>) - R^T A R ||_2.
// In exact arithmetic every value is zero; growth toward 1 means the bases
// have lost their defining structure.
struct StabilityReport {
  Method method = Method::CG;
  std::vector<double> ortho_loss;
  std::vector<double> conj_loss;
};

// Requires a trace with recorded vectors.  The operator is applied afresh
// where the metric needs A; recurrence-maintained vectors are used where the
// metric is about exactly those vectors.
StabilityReport stability_metrics(const IterationTrace& trace, Method method,
                                  const SymmetricOperator& op);

// || (b - A x) - r ||: one fresh matvec, no caching.
double residual_gap(const SymmetricOperator& op, const Vec& b, const Vec& x, const Vec& r);

// Largest singular value via power iteration on M^T M, to 1e-6 relative,
// from a seeded start.
double spectral_norm(const Matrix& m, std::uint64_t seed = 0);

// Converts trace rows to records (dividing by the cached norms) and writes
// the fixed-header CSV with 17 significant digits.  error_vs_truth entries
// come from `errors` when provided (one per row); absent values serialize as
// empty cells.
std::vector<IterationRecord> trace_records(const IterationTrace& trace,
                                           const std::vector<double>* errors = nullptr);
void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& records);

}  // namespace symkry
