#pragma once

// Dense reference computations for small problems (d up to a few hundred).
// Everything here is independent of the iterative solvers: eigenvalues come
// from a self-contained Jacobi sweep, Krylov bases are orthonormalized
// explicitly, and least-squares solves go through a dense pseudo-inverse.
// Tests compare solver output against these routines; the solver path never
// calls into this header.

#include <utility>
#include <vector>

#include "symkry/linops.hpp"
#include "symkry/vec.hpp"

namespace symkry::oracle {

struct DenseProblem {
  Matrix a;
  Vec b;
};

struct SpectralData {
  Vec eigenvalues;     // ascending
  Matrix eigenvectors; // column i pairs with eigenvalues[i]
  double rank_tol;     // d * eps * max |eigenvalue|; |lambda| <= rank_tol is rank-deficient
};

// Cyclic Jacobi on a symmetric matrix.  Rejects input whose symmetry defect
// exceeds 1e-12 relative to the largest entry.
SpectralData eig_symmetric(const Matrix& a);

// Minimum-norm least-squares solution: sum over |lambda| > rank_tol of
// (<u, b> / lambda) u.
Vec pseudo_inverse_solution(const Matrix& a, const Vec& b);
Vec pseudo_inverse_solution(const SpectralData& s, const Vec& b);

// b = b_range + b_null with b_range in Range(A), b_null in Null(A).  The two
// parts sum to b exactly: b_null is formed first, b_range by subtraction.
struct OrthoParts {
  Vec b_range;
  Vec b_null;
};
OrthoParts ortho_decompose(const Matrix& a, const Vec& b);
OrthoParts ortho_decompose(const SpectralData& s, const Vec& b);

// Distinct eigenvalue clusters (width 1e-10 relative to max |lambda|) whose
// eigenspace projection of b exceeds 1e-10 * ||b||.  Returns (cluster value,
// projection norm), ascending in value.  The zero eigenvalue participates
// like any other.
std::vector<std::pair<double, double>> relevant_eigenvalues(const Matrix& a, const Vec& b);

// Dimension at which the Krylov space of (A, b) stops growing.  Computed as
// the rank of [b, Ab, A^2 b, ...] via orthogonalization with a 1e-10
// relative threshold, cross-checked against the count of relevant
// eigenvalues; the two disagreeing is an error.
int grade(const Matrix& a, const Vec& b);

// Grade of (diag(entries), b) evaluated exactly from the diagonal structure:
// the number of distinct values among entries at positions where b is
// nonzero.  Usable at any dimension, unlike the dense routines.
int diagonal_grade(const Vec& entries, const Vec& b);

// argmin over the k-dimensional Krylov space of ||b - A x||, via an explicit
// orthonormal basis W and the dense pseudo-inverse of A W.  Requires
// 1 <= k <= grade; unique before breakdown.
Vec krylov_least_squares(const Matrix& a, const Vec& b, int k);

// Dense assembly of an operator by applying it to unit vectors.  Test and
// oracle use only.
Matrix to_dense(const SymmetricOperator& op);

}  // namespace symkry::oracle
