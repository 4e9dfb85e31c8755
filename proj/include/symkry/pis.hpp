#pragma once

// Pseudo-inverse solution recovery on top of the conjugate-direction runs.
//
// On a singular inconsistent system both CG and CR stop at a lucky breakdown
// with an iterate that is not yet the minimum-norm least-squares solution
// A^+ b.  The terminal direction spans the one Krylov null direction, so a
// single projection (plus, for CG, a correction accumulated during the run)
// recovers A^+ b without ever touching an eigendecomposition:
//
//   CG: the run accumulates x' = sum gamma_k p_k with
//       gamma_k = ||p_k||^2 / (||r_k||^2 <p_k, A p_k>); at breakdown
//       x* = x - (||r||^4 / ||p||^2) x', then x+ = project_out(x*, p).
//   CR: the terminal iterate already solves the normal equations;
//       x+ = project_out(x, p).
//
// On a consistent system both collapse to x+ = x* = x.

#include <optional>

#include "symkry/solvers.hpp"

namespace symkry {

struct PisReport {
  SolveReport base;
  std::optional<Vec> x_star;  // a normal-equations solution
  std::optional<Vec> x_plus;  // the minimum-norm solution A^+ b
  bool consistent = false;    // no terminal projection was needed
};

// x minus its component along p.  p must be nonzero.
Vec project_out(const Vec& x, const Vec& p);

PisReport cg_pis_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts);
PisReport cr_pis_solve(const SymmetricOperator& op, const Vec& b, const SolverOptions& opts);

}  // namespace symkry
