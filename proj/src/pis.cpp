#include "symkry/pis.hpp"

#include <cmath>
#include <stdexcept>

namespace symkry {

namespace {

// Consistency reading of a finished run: the terminal direction carries the
// residual's off-range mass, so a direction at noise level means nothing was
// left to project.
bool run_consistent(const CDState& st) {
  return st.p_norm <= st.opts.tol * st.b_norm;
}

}  // namespace

Vec project_out(const Vec& x, const Vec& p) {
  if (x.size() != p.size()) throw std::invalid_argument("project_out: size mismatch");
  const double pp = dot(p, p);
  if (pp == 0.0) throw std::invalid_argument("project_out: p must be nonzero");
  Vec out = x;
  axpy(-dot(p, x) / pp, p, out);
  return out;
}

PisReport cg_pis_solve(const SymmetricOperator& op, const Vec& b,
                       const SolverOptions& opts) {
  CDState st = cd_init(op, b, 0, opts);
  PisReport rep;
  SolveReport& base = rep.base;
  base.method = Method::CG;
  base.trace.b_norm = st.b_norm;
  base.trace.ab_norm = st.ab_norm;
  base.trace.vectors_recorded = opts.record_vectors;

  // Correction accumulator x' = sum_k gamma_k p_k over the executed
  // iterations.  The terminal index never contributes because the breakdown
  // check runs before the update (gamma at the grade is zero by convention).
  Vec xprime(b.size(), 0.0);
  Vec p_before(b.size());

  auto append = [&](const CDState& s) {
    TraceRow row;
    row.k = s.k;
    row.r_norm = s.r_norm;
    row.ar_norm = s.ar_norm;
    row.ap_norm = s.ap_norm;
    row.curvature = dot(s.p, s.ap);
    Vec gap = op.apply(s.x);
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = b[i] - gap[i] - s.r[i];
    row.residual_gap = norm2(gap);
    base.trace.rows.push_back(row);
    if (opts.record_vectors) {
      base.trace.x.push_back(s.x);
      base.trace.r.push_back(s.r);
      base.trace.p.push_back(s.p);
      base.trace.ap.push_back(s.ap);
      base.trace.ar.push_back(s.ar);
    }
  };
  append(st);

  for (;;) {
    p_before = st.p;
    const double rho_before = st.rho;      // ||r||^2 for s = 0
    const double pap_before = st.pap;
    const double pp_before = dot(st.p, st.p);

    const StepEvent ev = cd_step(st);
    if (ev.kind == EventKind::Progressed) {
      axpy(pp_before / (rho_before * pap_before), p_before, xprime);
      base.trace.alpha.push_back(st.last_alpha);
      base.trace.beta.push_back(st.last_beta);
      append(st);
      continue;
    }
    base.termination = ev.kind;
    break;
  }

  base.iterations = st.k;
  base.x = st.x;
  base.r = st.r;
  base.p = st.p;
  if (st.npc_seen) {
    base.npc_direction = st.npc_dir;
    base.npc_iteration = st.npc_k;
  }
  base.b_in_nullspace = st.b_in_null;

  if (base.termination == EventKind::ConvergedResidual) {
    rep.consistent = true;
    rep.x_star = st.x;
    rep.x_plus = st.x;
  } else if (base.termination == EventKind::LuckyBreakdownAp) {
    if (run_consistent(st)) {
      rep.consistent = true;
      rep.x_star = st.x;
      rep.x_plus = st.x;
    } else {
      rep.consistent = false;
      const double r2 = st.rho;  // exact <r, r>, not a squared stored norm
      const double p2 = dot(st.p, st.p);
      Vec xstar = st.x;
      axpy(-(r2 * r2) / p2, xprime, xstar);
      rep.x_star = xstar;
      rep.x_plus = project_out(xstar, st.p);
    }
  }
  // ZeroCurvature / MaxIterations terminations leave x_star and x_plus
  // unset; the base report says why.

  base.x_star = rep.x_star;
  base.x_plus = rep.x_plus;
  return rep;
}

PisReport cr_pis_solve(const SymmetricOperator& op, const Vec& b,
                       const SolverOptions& opts) {
  PisReport rep;
  rep.base = cr_solve(op, b, opts);
  const SolveReport& base = rep.base;

  if (base.termination == EventKind::ConvergedResidual) {
    rep.consistent = true;
    rep.x_star = base.x;
    rep.x_plus = base.x;
  } else if (base.termination == EventKind::LuckyBreakdownAr ||
             base.termination == EventKind::LuckyBreakdownAp) {
    // The terminal CR iterate already solves the normal equations.
    const double p_norm = norm2(base.p);
    if (p_norm <= opts.tol * base.trace.b_norm) {
      rep.consistent = true;
      rep.x_star = base.x;
      rep.x_plus = base.x;
    } else {
      rep.consistent = false;
      rep.x_star = base.x;
      rep.x_plus = project_out(base.x, base.p);
    }
  }

  rep.base.x_star = rep.x_star;
  rep.base.x_plus = rep.x_plus;
  return rep;
}

}  // namespace symkry
