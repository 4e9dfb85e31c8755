#pragma once

// Krylov solvers for symmetric, possibly singular or indefinite systems.
//
// CG and CR are two instances (s = 0 and s = 1) of one conjugate-direction
// recurrence driven through an explicit state machine, so callers can watch
// every termination mode instead of getting a converged/failed bit:
//
//   alpha_k = <r_k, A^s r_k> / <p_k, A^(s+1) p_k>
//   x_{k+1} = x_k + alpha_k p_k
//   r_{k+1} = r_k - alpha_k A p_k
//   beta_k  = <r_{k+1}, A^s r_{k+1}> / <r_k, A^s r_k>
//   p_{k+1} = r_{k+1} + beta_k p_k
//
// On a singular system with b outside Range(A), the residual never reaches
// zero; instead A p (for CG) or A r (for CR) collapses at the grade of b.
// Those collapses are detected and reported as lucky breakdowns: CG's iterate
// is then one projection away from the pseudo-inverse solution and CR's
// iterate is a least-squares (normal) solution.  MINRES is implemented
// separately via Lanczos plus Givens QR and shares the event vocabulary.

#include <optional>
#include <vector>

#include "symkry/linops.hpp"
#include "symkry/vec.hpp"

namespace symkry {

enum class Method { CG, CR, MINRES };

enum class EventKind {
  Progressed,          // one update completed
  ConvergedResidual,   // ||r|| / ||b|| <= tol
  LuckyBreakdownAp,    // ||Ap|| / ||Ab|| <= tol (CG); grade reached, r_k is final
  LuckyBreakdownAr,    // ||Ar|| / ||Ab|| <= tol (CR, MINRES); normal solution reached
  ZeroCurvature,       // <p, Ap> = 0 with p outside Null(A): alpha undefined, cannot proceed
  NonpositiveCurvature,// <p, Ap> <= 0 observed; returned only under NpcPolicy::Stop
  MaxIterations,
};

const char* event_name(EventKind k);

enum class CurvaturePolicy { Error, ReturnEvent };
enum class NpcPolicy { Continue, Stop };

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 0;  // 0: use the operator dimension
  CurvaturePolicy curvature_policy = CurvaturePolicy::ReturnEvent;
  // Nonpositive curvature does not stop the run by default; optimization
  // callers that want the direction as soon as it appears set Stop.
  NpcPolicy npc_policy = NpcPolicy::Continue;
  bool record_vectors = false;
};

// Detection threshold for <p, Ap> = 0 relative to ||p|| * ||Ap||.
inline constexpr double kCurvatureEps = 1e-12;

struct StepEvent {
  EventKind kind = EventKind::Progressed;
  int k = 0;             // state index the event describes
  double curvature = 0;  // <p, Ap> for curvature events
  std::optional<Vec> direction;  // offending p for ZeroCurvature / NonpositiveCurvature
};

// Scalars describing state k.  residual_gap and, for CG, the error-vs-truth
// column are filled by the drivers, not by cd_step.
struct TraceRow {
  int k = 0;
  double r_norm = 0;
  double ar_norm = 0;
  double ap_norm = 0;
  double curvature = 0;      // <p_k, A p_k> (CD); Lanczos alpha_k for MINRES, NaN at k=0
  double residual_gap = 0;   // ||(b - A x_k) - r_k||
};

struct IterationTrace {
  double b_norm = 0;
  double ab_norm = 0;
  std::vector<TraceRow> rows;        // rows[k] describes state k
  std::vector<double> alpha, beta;   // alpha[k], beta[k] from update k -> k+1
  bool vectors_recorded = false;
  // Per state k when vectors_recorded.  For MINRES, p holds the update
  // direction d_k scaled by tau_k (so x_k - x_{k-1}) and ap/ar are unused.
  std::vector<Vec> x, r, p, ap, ar;
  std::vector<Vec> lanczos_v;  // MINRES only: v_{k+1} alongside state k
};

struct SolveReport {
  Method method = Method::CG;
  EventKind termination = EventKind::MaxIterations;
  int iterations = 0;  // completed updates
  Vec x;
  Vec r;
  Vec p;                       // direction at termination (CD methods)
  IterationTrace trace;
  std::optional<Vec> npc_direction;  // first direction with <p, Ap> <= 0
  int npc_iteration = -1;
  bool b_in_nullspace = false;  // A b = 0 with b != 0: solved trivially at k = 0
  // Filled by the pseudo-inverse drivers in pis.hpp.
  std::optional<Vec> x_star;
  std::optional<Vec> x_plus;
};

// Resumable conjugate-direction state.  s = 0 gives CG, s = 1 gives CR.
struct CDState {
  int s = 0;
  int k = 0;
  const SymmetricOperator* op = nullptr;
  Vec b;
  Vec x, r, p, ap, ar;
  double rho = 0;    // <r, A^s r>
  double pap = 0;    // <p, A^(s+1) p>
  double r_norm = 0, ar_norm = 0, ap_norm = 0, p_norm = 0;
  double b_norm = 0, ab_norm = 0;
  bool b_in_null = false;  // A b = 0 with b != 0
  SolverOptions opts;
  bool terminated = false;
  EventKind terminal_kind = EventKind::Progressed;
  bool npc_seen = false;
  int npc_k = -1;
  Vec npc_dir;
  double last_alpha = 0, last_beta = 0;
};

// MINRES working set: the two live Lanczos vectors, the rotated tridiagonal
// scalars carried between iterations, the last two update directions, and
// the residual-norm recurrence phi = ||r_k||.  The residual vector itself is
// maintained alongside (r_k = s_k^2 r_{k-1} - phi_k c_k v_{k+1}) so the gap
// diagnostic has something to compare against a fresh b - A x.
struct MinresState {
  int k = 0;
  Vec x, r;
  Vec v_prev, v_cur;
  Vec d_prev, d_prev2;
  double alpha = 0, beta = 0;     // current tridiagonal entries
  double c = -1.0, sn = 0.0;      // last Givens rotation
  double delta1 = 0, eps = 0;     // rotation carries into the next column
  double tau = 0;                 // last step length along d_k
  double phi = 0;                 // ||r_k|| by recurrence
};

// Builds state k = 0 with r = p = b - A x0.  b must be nonzero.  For s = 1
// the A p cache starts as a copy of A r; from then on it is maintained by
// the recurrence A p_{k+1} = A r_{k+1} + beta_k A p_k with one fresh matvec
// (A r) per iteration.  For s = 0 the fresh matvec is A p and the A r cache
// is derived from the same recurrence; drift in either derived cache is
// visible through the residual-gap and stability diagnostics and is never
// silently corrected.
CDState cd_init(const SymmetricOperator& op, const Vec& b, int s,
                const SolverOptions& opts, const Vec* x0 = nullptr);

// One termination check followed by at most one update.  Check order: (a)
// residual convergence, (b) lucky breakdown (Ap for s = 0, Ar for s = 1),
// (c) iteration cap, (d) zero curvature, then nonpositive curvature is
// flagged and the update runs.  Terminal events repeat if called again.
StepEvent cd_step(CDState& st);

SolveReport cg_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts);
SolveReport cr_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts);
SolveReport minres_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts);

// First direction with <p, Ap> <= 0 encountered during the run, if any.
// A terminal lucky breakdown direction (A p = 0 with p != 0) qualifies: it
// is a curvature-zero direction certifying a nonpositive (zero) eigenvalue
// relevant to b.
std::optional<Vec> npc_certificate(const SolveReport& report);

}  // namespace symkry
