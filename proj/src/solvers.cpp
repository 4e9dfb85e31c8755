#include "symkry/solvers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace symkry {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Lanczos beta below this times a running estimate of ||A|| means the Krylov
// space is numerically exhausted (the grade was reached).
constexpr double kBetaBreakdownEps = 1e-12;

int iteration_cap(const SymmetricOperator& op, const SolverOptions& opts) {
  return opts.max_iter > 0 ? opts.max_iter : op.dim();
}

void append_row(IterationTrace& tr, const SymmetricOperator& op, const Vec& b,
                const CDState& st) {
  TraceRow row;
  row.k = st.k;
  row.r_norm = st.r_norm;
  row.ar_norm = st.ar_norm;
  row.ap_norm = st.ap_norm;
  row.curvature = dot(st.p, st.ap);
  Vec gap = op.apply(st.x);        // gap = (b - A x) - r
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = b[i] - gap[i] - st.r[i];
  row.residual_gap = norm2(gap);
  tr.rows.push_back(row);
  if (tr.vectors_recorded) {
    tr.x.push_back(st.x);
    tr.r.push_back(st.r);
    tr.p.push_back(st.p);
    tr.ap.push_back(st.ap);
    tr.ar.push_back(st.ar);
  }
}

SolveReport run_cd(const SymmetricOperator& op, const Vec& b, int s,
                   const SolverOptions& opts) {
  CDState st = cd_init(op, b, s, opts);
  SolveReport rep;
  rep.method = (s == 0) ? Method::CG : Method::CR;
  rep.trace.b_norm = st.b_norm;
  rep.trace.ab_norm = st.ab_norm;
  rep.trace.vectors_recorded = opts.record_vectors;
  append_row(rep.trace, op, b, st);

  for (;;) {
    const StepEvent ev = cd_step(st);
    if (ev.kind == EventKind::Progressed) {
      rep.trace.alpha.push_back(st.last_alpha);
      rep.trace.beta.push_back(st.last_beta);
      append_row(rep.trace, op, b, st);
      continue;
    }
    rep.termination = ev.kind;
    break;
  }

  rep.iterations = st.k;
  rep.x = std::move(st.x);
  rep.r = std::move(st.r);
  rep.p = std::move(st.p);
  if (st.npc_seen) {
    rep.npc_direction = std::move(st.npc_dir);
    rep.npc_iteration = st.npc_k;
  }
  rep.b_in_nullspace = st.b_in_null;
  rep.trace.rows.shrink_to_fit();
  return rep;
}

}  // namespace

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::Progressed: return "progressed";
    case EventKind::ConvergedResidual: return "converged_residual";
    case EventKind::LuckyBreakdownAp: return "lucky_breakdown_ap";
    case EventKind::LuckyBreakdownAr: return "lucky_breakdown_ar";
    case EventKind::ZeroCurvature: return "zero_curvature";
    case EventKind::NonpositiveCurvature: return "nonpositive_curvature";
    case EventKind::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

CDState cd_init(const SymmetricOperator& op, const Vec& b, int s,
                const SolverOptions& opts, const Vec* x0) {
  if (s != 0 && s != 1) throw std::invalid_argument("cd_init: s must be 0 (CG) or 1 (CR)");
  if (static_cast<int>(b.size()) != op.dim())
    throw std::invalid_argument("cd_init: b length does not match operator dim");
  if (!all_finite(b)) throw std::invalid_argument("cd_init: b has non-finite entries");

  CDState st;
  st.s = s;
  st.op = &op;
  st.b = b;
  st.opts = opts;
  st.b_norm = norm2(b);
  if (st.b_norm == 0.0) throw std::invalid_argument("cd_init: b must be nonzero");

  const bool have_x0 = (x0 != nullptr && norm2(*x0) > 0.0);
  if (have_x0 && static_cast<int>(x0->size()) != op.dim())
    throw std::invalid_argument("cd_init: x0 length does not match operator dim");

  Vec ab;  // A b, for the termination scale
  if (have_x0) {
    st.x = *x0;
    st.r = sub(b, op.apply(st.x));
    ab = op.apply(b);
  } else {
    st.x.assign(b.size(), 0.0);
    st.r = b;
    ab = op.apply(b);
  }
  st.ab_norm = norm2(ab);
  st.p = st.r;

  // With x = 0 the initial caches A p = A r = A b all coincide; a nonzero x0
  // needs one extra apply for the direction cache.
  if (have_x0) {
    st.ap = op.apply(st.p);
    st.ar = st.ap;  // r = p at k = 0
  } else {
    st.ap = ab;
    st.ar = ab;
  }

  st.r_norm = norm2(st.r);
  st.ar_norm = norm2(st.ar);
  st.ap_norm = norm2(st.ap);
  st.p_norm = norm2(st.p);
  // rho and pap are kept as plain inner products, not squared stored norms,
  // so exactly representable runs stay exact.
  if (s == 0) {
    st.rho = dot(st.r, st.r);
    st.pap = dot(st.p, st.ap);
  } else {
    st.rho = dot(st.r, st.ar);
    st.pap = dot(st.ap, st.ap);
  }
  st.b_in_null = (st.ab_norm == 0.0);
  return st;
}

StepEvent cd_step(CDState& st) {
  if (st.terminated) {
    StepEvent ev{st.terminal_kind, st.k, 0.0, std::nullopt};
    if (st.terminal_kind == EventKind::ZeroCurvature ||
        st.terminal_kind == EventKind::NonpositiveCurvature) {
      ev.curvature = dot(st.p, st.ap);
      ev.direction = st.p;
    }
    return ev;
  }

  auto terminal = [&](EventKind kind) {
    st.terminated = true;
    st.terminal_kind = kind;
    return StepEvent{kind, st.k, 0.0, std::nullopt};
  };

  // b in Null(A): x = 0 already solves the normal equations and the
  // pseudo-inverse problem; nothing to iterate on.  The event kind follows
  // the method vocabulary (A p = A r = A b = 0 either way).
  if (st.b_in_null)
    return terminal(st.s == 0 ? EventKind::LuckyBreakdownAp : EventKind::LuckyBreakdownAr);

  const double tol = st.opts.tol;
  if (st.r_norm <= tol * st.b_norm) return terminal(EventKind::ConvergedResidual);

  // Lucky breakdown, two scales.  Against ||Ab||: the plain reading of the
  // termination criterion.  Against ||A|| * ||candidate||: on inconsistent
  // systems the iterates grow without bound approaching the grade, and the
  // rounded image of the exact zero grows with them, so the test must too.
  // Pre-grade directions keep ||A v|| / ||v|| above the smallest relevant
  // eigenvalue magnitude, so the scaled form cannot fire early.
  const double anorm_proxy = st.ab_norm / st.b_norm;
  if (st.s == 0) {
    if (st.ap_norm <= tol * st.ab_norm || st.ap_norm <= tol * anorm_proxy * st.p_norm)
      return terminal(EventKind::LuckyBreakdownAp);
  } else {
    if (st.ar_norm <= tol * st.ab_norm || st.ar_norm <= tol * anorm_proxy * st.r_norm)
      return terminal(EventKind::LuckyBreakdownAr);
  }

  if (st.k >= iteration_cap(*st.op, st.opts)) return terminal(EventKind::MaxIterations);

  // Zero curvature: the quantity dividing the next alpha or beta vanishes
  // while its factors do not, so no further iterate is defined.  For s = 0
  // that is <p, Ap>, for s = 1 it is <r, Ar> (which feeds both alpha and
  // beta); the exact-zero test on <p, A^{s+1} p> covers the s = 1 alpha
  // denominator as well.
  const double curv_lhs = (st.s == 0) ? std::abs(st.pap) : std::abs(st.rho);
  const double curv_scale =
      (st.s == 0) ? st.p_norm * st.ap_norm : st.r_norm * st.ar_norm;
  if (curv_lhs <= kCurvatureEps * curv_scale || st.pap == 0.0) {
    if (st.opts.curvature_policy == CurvaturePolicy::Error)
      throw std::runtime_error(
          std::string("cd_step: zero-curvature breakdown at iteration ") +
          std::to_string(st.k) + " (" + (st.s == 0 ? "<p,Ap>" : "<r,Ar>") + " = " +
          std::to_string(st.s == 0 ? st.pap : st.rho) + ")");
    StepEvent ev = terminal(EventKind::ZeroCurvature);
    ev.curvature = (st.s == 0) ? st.pap : st.rho;
    ev.direction = (st.s == 0) ? st.p : st.r;
    return ev;
  }

  // Nonpositive curvature of the current direction.  Flag it (the run keeps
  // going; on indefinite systems CG still reaches the grade) unless the
  // caller asked to stop for the certificate.
  const double p_curv = (st.s == 0) ? st.pap : dot(st.p, st.ap);
  if (p_curv < 0.0 && !st.npc_seen) {
    st.npc_seen = true;
    st.npc_k = st.k;
    st.npc_dir = st.p;
  }
  if (p_curv < 0.0 && st.opts.npc_policy == NpcPolicy::Stop) {
    StepEvent ev = terminal(EventKind::NonpositiveCurvature);
    ev.curvature = p_curv;
    ev.direction = st.p;
    return ev;
  }

  // Update k -> k+1.
  const double alpha = st.rho / st.pap;
  axpy(alpha, st.p, st.x);
  axpy(-alpha, st.ap, st.r);
  st.r_norm = norm2(st.r);

  double rho_new;
  if (st.s == 0) {
    rho_new = dot(st.r, st.r);
  } else {
    st.ar = st.op->apply(st.r);  // the one fresh matvec of a CR iteration
    rho_new = dot(st.r, st.ar);
  }
  const double beta = rho_new / st.rho;

  // p = r + beta p
  for (std::size_t i = 0; i < st.p.size(); ++i)
    st.p[i] = st.r[i] + beta * st.p[i];

  if (st.s == 0) {
    Vec ap_new = st.op->apply(st.p);  // the one fresh matvec of a CG iteration
    // A r = A p - beta * (A p)_old, same recurrence CR uses for A p.
    for (std::size_t i = 0; i < st.ar.size(); ++i)
      st.ar[i] = ap_new[i] - beta * st.ap[i];
    st.ap = std::move(ap_new);
    st.pap = dot(st.p, st.ap);
  } else {
    // A p = A r + beta * (A p)_old
    for (std::size_t i = 0; i < st.ap.size(); ++i)
      st.ap[i] = st.ar[i] + beta * st.ap[i];
    st.pap = dot(st.ap, st.ap);
  }

  st.rho = rho_new;
  st.ar_norm = norm2(st.ar);
  st.ap_norm = norm2(st.ap);
  st.p_norm = norm2(st.p);
  st.last_alpha = alpha;
  st.last_beta = beta;
  st.k += 1;
  return StepEvent{EventKind::Progressed, st.k, 0.0, std::nullopt};
}

SolveReport cg_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts) {
  return run_cd(op, b, 0, opts);
}

SolveReport cr_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts) {
  return run_cd(op, b, 1, opts);
}

SolveReport minres_solve(const SymmetricOperator& op, const Vec& b,
                         const SolverOptions& opts) {
  if (static_cast<int>(b.size()) != op.dim())
    throw std::invalid_argument("minres_solve: b length does not match operator dim");
  if (!all_finite(b)) throw std::invalid_argument("minres_solve: b has non-finite entries");
  const double b_norm = norm2(b);
  if (b_norm == 0.0) throw std::invalid_argument("minres_solve: b must be nonzero");

  const int d = op.dim();
  const int cap = iteration_cap(op, opts);

  SolveReport rep;
  rep.method = Method::MINRES;
  rep.trace.vectors_recorded = opts.record_vectors;
  rep.trace.b_norm = b_norm;

  const Vec ab = op.apply(b);
  const double ab_norm = norm2(ab);
  rep.trace.ab_norm = ab_norm;

  MinresState st;
  st.x.assign(static_cast<std::size_t>(d), 0.0);
  st.r = b;
  st.phi = b_norm;
  st.v_cur = scaled(b, 1.0 / b_norm);
  st.v_prev.assign(static_cast<std::size_t>(d), 0.0);
  st.d_prev.assign(static_cast<std::size_t>(d), 0.0);
  st.d_prev2.assign(static_cast<std::size_t>(d), 0.0);

  if (ab_norm == 0.0) {
    // b spans a null direction; x = 0 is the pseudo-inverse solution.
    rep.termination = EventKind::LuckyBreakdownAr;
    rep.b_in_nullspace = true;
    rep.x = st.x;
    rep.r = st.r;
    TraceRow row{0, b_norm, 0.0, kNaN, kNaN, 0.0};
    rep.trace.rows.push_back(row);
    if (opts.record_vectors) {
      rep.trace.x.push_back(rep.x);
      rep.trace.r.push_back(rep.r);
      rep.trace.p.emplace_back(static_cast<std::size_t>(d), 0.0);
      rep.trace.lanczos_v.push_back(st.v_cur);
    }
    return rep;
  }

  double anorm_est = 0.0;
  bool pending_breakdown = false;

  auto append = [&](double curvature, const Vec& step) {
    TraceRow row;
    row.k = st.k;
    row.r_norm = st.phi;
    Vec ar = op.apply(st.r);
    row.ar_norm = norm2(ar);
    row.ap_norm = kNaN;  // no conjugate direction in this method
    row.curvature = curvature;
    Vec gap = op.apply(st.x);
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = b[i] - gap[i] - st.r[i];
    row.residual_gap = norm2(gap);
    rep.trace.rows.push_back(row);
    if (opts.record_vectors) {
      rep.trace.x.push_back(st.x);
      rep.trace.r.push_back(st.r);
      rep.trace.p.push_back(step);
      rep.trace.lanczos_v.push_back(st.v_cur);
    }
    return row;
  };

  TraceRow last = append(kNaN, Vec(static_cast<std::size_t>(d), 0.0));

  for (;;) {
    if (last.r_norm <= opts.tol * b_norm) {
      rep.termination = EventKind::ConvergedResidual;
      break;
    }
    if (last.ar_norm <= opts.tol * ab_norm) {
      rep.termination = EventKind::LuckyBreakdownAr;
      break;
    }
    if (pending_breakdown) {
      // Lanczos found an invariant subspace: the grade is reached, and the
      // iterate solves the normal equations over the whole Krylov space.
      rep.termination = EventKind::LuckyBreakdownAr;
      break;
    }
    if (st.k >= cap) {
      rep.termination = EventKind::MaxIterations;
      break;
    }

    // Lanczos expansion: beta_{k+2} v_next = A v_cur - alpha v_cur - beta_{k+1} v_prev.
    Vec q = op.apply(st.v_cur);
    const double alpha = dot(st.v_cur, q);
    axpy(-alpha, st.v_cur, q);
    if (st.beta != 0.0) axpy(-st.beta, st.v_prev, q);
    const double beta_next = norm2(q);

    anorm_est = std::max(anorm_est,
                         std::sqrt(alpha * alpha + st.beta * st.beta + beta_next * beta_next));

    // Previous rotation applied to the new tridiagonal column.
    const double delta2 = st.c * st.delta1 + st.sn * alpha;
    const double gamma1 = st.sn * st.delta1 - st.c * alpha;
    const double eps_next = st.sn * beta_next;
    const double delta1_next = -st.c * beta_next;

    // Fresh rotation eliminating beta_next.  The tie-break threshold is
    // relative: at Lanczos exhaustion gamma2 underflows to round-off rather
    // than exact zero, and dividing by it would blow up the iterate one step
    // before the pending-breakdown flag stops the loop.
    const double gamma2 = std::sqrt(gamma1 * gamma1 + beta_next * beta_next);
    Vec step(static_cast<std::size_t>(d), 0.0);
    double c_new, s_new, tau;
    if (gamma2 > kBetaBreakdownEps * anorm_est) {
      c_new = gamma1 / gamma2;
      s_new = beta_next / gamma2;
      tau = c_new * st.phi;
      // d_k = (v_k - delta2 d_{k-1} - eps_k d_{k-2}) / gamma2
      Vec dk = st.v_cur;
      axpy(-delta2, st.d_prev, dk);
      axpy(-st.eps, st.d_prev2, dk);
      scale(1.0 / gamma2, dk);
      step = scaled(dk, tau);
      axpy(tau, dk, st.x);
      st.d_prev2 = std::move(st.d_prev);
      st.d_prev = std::move(dk);
      st.phi = s_new * st.phi;
    } else {
      // gamma1 = beta_next = 0: singular head; the minimizer does not move.
      c_new = 0.0;
      s_new = 1.0;
      tau = 0.0;
      st.d_prev2 = st.d_prev;
      st.d_prev.assign(static_cast<std::size_t>(d), 0.0);
    }

    // Residual recurrence r_k = s^2 r_{k-1} - phi_k c_k v_{k+1}.
    scale(s_new * s_new, st.r);
    if (beta_next > 0.0) {
      scale(1.0 / beta_next, q);  // q is now v_{k+1}
      axpy(-st.phi * c_new, q, st.r);
    }

    st.v_prev = std::move(st.v_cur);
    st.v_cur = std::move(q);  // unit only when beta_next > 0; unused otherwise
    st.c = c_new;
    st.sn = s_new;
    st.delta1 = delta1_next;
    st.eps = eps_next;
    st.beta = beta_next;
    st.alpha = alpha;
    st.tau = tau;
    st.k += 1;

    rep.trace.alpha.push_back(alpha);
    rep.trace.beta.push_back(beta_next);

    if (beta_next <= kBetaBreakdownEps * anorm_est) pending_breakdown = true;

    // A sound (though not exhaustive) nonpositive-curvature witness: the
    // Lanczos vector itself when its Rayleigh quotient is nonpositive.
    if (alpha <= 0.0 && !rep.npc_direction) {
      rep.npc_direction = st.v_prev;
      rep.npc_iteration = st.k - 1;
    }

    last = append(alpha, step);
  }

  rep.iterations = st.k;
  rep.x = std::move(st.x);
  rep.r = std::move(st.r);
  return rep;
}

std::optional<Vec> npc_certificate(const SolveReport& report) {
  if (report.npc_direction) return report.npc_direction;
  // The terminal direction certifies a nonpositive relevant eigenvalue when
  // its Rayleigh quotient is nonpositive at the scale of the operator (a
  // breakdown direction has A p = round-off, so <p,Ap>/||p||^2 collapses;
  // a merely well-converged direction keeps a positive quotient bounded by
  // the spectrum).  ||Ab|| / ||b|| stands in for the operator norm.
  if ((report.method == Method::CG || report.method == Method::CR) &&
      !report.trace.rows.empty() && report.trace.b_norm > 0.0) {
    const double pn = norm2(report.p);
    if (pn > 0.0) {
      const double curv = report.trace.rows.back().curvature;
      const double scale = report.trace.ab_norm / report.trace.b_norm;
      if (curv <= 1e-8 * scale * pn * pn) return report.p;
    }
  }
  return std::nullopt;
}

}  // namespace symkry
