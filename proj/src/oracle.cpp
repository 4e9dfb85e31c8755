#include "symkry/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace symkry::oracle {

namespace {

constexpr double kJacobiTol = 1e-12;    // off-diagonal Frobenius, relative to ||A||_F
constexpr int kJacobiMaxSweeps = 64;
constexpr double kKrylovRankTol = 1e-10;
constexpr double kClusterTol = 1e-10;   // relative to max |lambda|
constexpr double kRelevanceTol = 1e-10; // projection threshold, relative to ||b||

void require_square(const Matrix& a, const char* who) {
  if (a.rows != a.cols) throw std::invalid_argument(std::string(who) + ": matrix not square");
  if (a.rows == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
}

void require_symmetric(const Matrix& a, const char* who) {
  double defect = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j)
      defect = std::max(defect, std::abs(a(i, j) - a(j, i)));
  const double scale = max_abs(a);
  if (scale > 0.0 && defect > 1e-12 * scale)
    throw std::invalid_argument(std::string(who) + ": symmetry defect " + std::to_string(defect));
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Projection of b onto span of eigenvectors with |lambda| <= rank_tol.
Vec null_component(const SpectralData& s, const Vec& b) {
  const int d = s.eigenvectors.rows;
  Vec out(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    if (std::abs(s.eigenvalues[static_cast<std::size_t>(i)]) > s.rank_tol) continue;
    double c = 0.0;
    for (int r = 0; r < d; ++r) c += s.eigenvectors(r, i) * b[static_cast<std::size_t>(r)];
    for (int r = 0; r < d; ++r) out[static_cast<std::size_t>(r)] += c * s.eigenvectors(r, i);
  }
  return out;
}

// Extended-precision scalar for the Krylov rank detection.  Basis round-off
// is re-amplified at every step by the inverse of that step's shrink ratio,
// so once the product of the ratios crosses 1/eps the working precision
// starts manufacturing spurious directions.  Quad precision moves that wall
// from grade ~ 20 out past grade ~ 80.
#if defined(__SIZEOF_FLOAT128__)
using wide = __float128;
#else
using wide = long double;
#endif

// Newton refinement of the double-precision square root; arithmetic-only,
// so no quad math library is needed.
wide wide_sqrt(wide x) {
  wide s = static_cast<wide>(std::sqrt(static_cast<double>(x)));
  s = static_cast<wide>(0.5) * (s + x / s);
  s = static_cast<wide>(0.5) * (s + x / s);
  return s;
}

// Orthonormal Krylov basis of (a, b), grown until the next direction falls
// below `tol` relative to its pre-orthogonalization norm, or `max_k` columns.
std::vector<Vec> krylov_basis(const Matrix& a, const Vec& b, int max_k, double tol) {
  const int d = a.rows;
  const wide tol2 = static_cast<wide>(tol) * static_cast<wide>(tol);
  std::vector<std::vector<wide>> w;
  std::vector<wide> v(b.begin(), b.end());
  while (static_cast<int>(w.size()) < max_k) {
    wide pre2 = 0;
    for (wide e : v) pre2 += e * e;
    if (pre2 == 0) break;
    // Modified Gram-Schmidt, twice; the second pass keeps the basis
    // orthonormal to working precision, which the rank threshold relies on.
    for (int pass = 0; pass < 2; ++pass)
      for (const std::vector<wide>& q : w) {
        wide c = 0;
        for (int i = 0; i < d; ++i) c += q[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] -= c * q[static_cast<std::size_t>(i)];
      }
    wide post2 = 0;
    for (wide e : v) post2 += e * e;
    if (post2 <= tol2 * pre2) break;
    const wide inv = static_cast<wide>(1) / wide_sqrt(post2);
    for (wide& e : v) e *= inv;
    w.push_back(v);
    std::vector<wide> next(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
      wide s = 0;
      const double* row = &a.a[static_cast<std::size_t>(i) * a.cols];
      for (int j = 0; j < d; ++j) s += static_cast<wide>(row[j]) * v[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = s;
    }
    v = std::move(next);
  }
  std::vector<Vec> out;
  out.reserve(w.size());
  for (const std::vector<wide>& q : w) {
    Vec col(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      col[static_cast<std::size_t>(i)] = static_cast<double>(q[static_cast<std::size_t>(i)]);
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace

SpectralData eig_symmetric(const Matrix& a_in) {
  require_square(a_in, "eig_symmetric");
  require_symmetric(a_in, "eig_symmetric");
  const int d = a_in.rows;
  Matrix a = a_in;
  Matrix v = Matrix::identity(d);

  const double fro0 = frobenius_norm(a);
  const double stop = kJacobiTol * (fro0 > 0.0 ? fro0 : 1.0);

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= stop) break;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rutishauser rotation: stable computation of t = tan(theta).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                             : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > stop)
    throw std::runtime_error("eig_symmetric: Jacobi sweep did not converge");

  SpectralData out;
  out.eigenvalues.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) out.eigenvalues[static_cast<std::size_t>(i)] = a(i, i);

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return out.eigenvalues[static_cast<std::size_t>(x)] < out.eigenvalues[static_cast<std::size_t>(y)];
  });

  Vec sorted_vals(static_cast<std::size_t>(d));
  Matrix sorted_vecs(d, d);
  for (int i = 0; i < d; ++i) {
    sorted_vals[static_cast<std::size_t>(i)] = out.eigenvalues[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    for (int r = 0; r < d; ++r) sorted_vecs(r, i) = v(r, order[static_cast<std::size_t>(i)]);
  }
  out.eigenvalues = std::move(sorted_vals);
  out.eigenvectors = std::move(sorted_vecs);

  double max_abs_lambda = 0.0;
  for (double lam : out.eigenvalues) max_abs_lambda = std::max(max_abs_lambda, std::abs(lam));
  out.rank_tol = d * std::numeric_limits<double>::epsilon() * max_abs_lambda;
  return out;
}

Vec pseudo_inverse_solution(const SpectralData& s, const Vec& b) {
  const int d = s.eigenvectors.rows;
  if (static_cast<int>(b.size()) != d)
    throw std::invalid_argument("pseudo_inverse_solution: size mismatch");
  Vec x(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    const double lam = s.eigenvalues[static_cast<std::size_t>(i)];
    if (std::abs(lam) <= s.rank_tol) continue;
    double c = 0.0;
    for (int r = 0; r < d; ++r) c += s.eigenvectors(r, i) * b[static_cast<std::size_t>(r)];
    c /= lam;
    for (int r = 0; r < d; ++r) x[static_cast<std::size_t>(r)] += c * s.eigenvectors(r, i);
  }
  return x;
}

Vec pseudo_inverse_solution(const Matrix& a, const Vec& b) {
  return pseudo_inverse_solution(eig_symmetric(a), b);
}

OrthoParts ortho_decompose(const SpectralData& s, const Vec& b) {
  if (static_cast<int>(b.size()) != s.eigenvectors.rows)
    throw std::invalid_argument("ortho_decompose: size mismatch");
  OrthoParts parts;
  parts.b_null = null_component(s, b);
  parts.b_range = sub(b, parts.b_null);
  return parts;
}

OrthoParts ortho_decompose(const Matrix& a, const Vec& b) {
  return ortho_decompose(eig_symmetric(a), b);
}

std::vector<std::pair<double, double>> relevant_eigenvalues(const Matrix& a, const Vec& b) {
  require_square(a, "relevant_eigenvalues");
  if (static_cast<int>(b.size()) != a.rows)
    throw std::invalid_argument("relevant_eigenvalues: size mismatch");
  const SpectralData s = eig_symmetric(a);
  const int d = a.rows;

  double max_abs_lambda = 0.0;
  for (double lam : s.eigenvalues) max_abs_lambda = std::max(max_abs_lambda, std::abs(lam));
  const double cluster_width = kClusterTol * (max_abs_lambda > 0.0 ? max_abs_lambda : 1.0);
  const double b_norm = norm2(b);

  std::vector<std::pair<double, double>> out;
  int i = 0;
  while (i < d) {
    int j = i;
    while (j + 1 < d &&
           s.eigenvalues[static_cast<std::size_t>(j + 1)] - s.eigenvalues[static_cast<std::size_t>(j)] <= cluster_width)
      ++j;
    // Projection norm of b onto the cluster eigenspace.
    double proj_sq = 0.0;
    double value = 0.0;
    for (int k = i; k <= j; ++k) {
      double c = 0.0;
      for (int r = 0; r < d; ++r) c += s.eigenvectors(r, k) * b[static_cast<std::size_t>(r)];
      proj_sq += c * c;
      value += s.eigenvalues[static_cast<std::size_t>(k)];
    }
    value /= (j - i + 1);
    const double proj = std::sqrt(proj_sq);
    if (proj > kRelevanceTol * b_norm) out.emplace_back(value, proj);
    i = j + 1;
  }
  return out;
}

int grade(const Matrix& a, const Vec& b) {
  require_square(a, "grade");
  if (static_cast<int>(b.size()) != a.rows) throw std::invalid_argument("grade: size mismatch");
  if (norm2(b) == 0.0) throw std::invalid_argument("grade: b must be nonzero");

  const int by_rank = static_cast<int>(krylov_basis(a, b, a.rows, kKrylovRankTol).size());
  const int by_spectrum = static_cast<int>(relevant_eigenvalues(a, b).size());
  if (by_rank != by_spectrum)
    throw std::runtime_error("grade: Krylov rank " + std::to_string(by_rank) +
                             " disagrees with relevant eigenvalue count " +
                             std::to_string(by_spectrum));
  return by_rank;
}

int diagonal_grade(const Vec& entries, const Vec& b) {
  if (entries.size() != b.size()) throw std::invalid_argument("diagonal_grade: size mismatch");
  if (norm2(b) == 0.0) throw std::invalid_argument("diagonal_grade: b must be nonzero");
  Vec active;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (b[i] != 0.0) active.push_back(entries[i]);
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  return static_cast<int>(active.size());
}

Vec krylov_least_squares(const Matrix& a, const Vec& b, int k) {
  require_square(a, "krylov_least_squares");
  if (static_cast<int>(b.size()) != a.rows)
    throw std::invalid_argument("krylov_least_squares: size mismatch");
  if (k < 1) throw std::invalid_argument("krylov_least_squares: k must be >= 1");

  const std::vector<Vec> w = krylov_basis(a, b, k, kKrylovRankTol);
  if (static_cast<int>(w.size()) < k)
    throw std::invalid_argument("krylov_least_squares: k exceeds the grade (" +
                                std::to_string(w.size()) + ")");

  const int d = a.rows;
  // Columns of M = A W.
  std::vector<Vec> m;
  m.reserve(w.size());
  for (const Vec& q : w) m.push_back(matvec(a, q));

  // y = M^+ b through the symmetric augmented matrix [[0, M^T], [M, 0]],
  // whose positive eigenpairs (sigma, [v; u]) carry the singular triplets of
  // M.  This keeps the conditioning of M itself, unlike normal equations,
  // and rank deficiency of M (k equal to the grade on a singular system)
  // falls out of the spectral cutoff.
  Matrix aug(k + d, k + d);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < d; ++i) {
      aug(k + i, j) = m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      aug(j, k + i) = m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
  const SpectralData s = eig_symmetric(aug);

  Vec y(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k + d; ++i) {
    const double sigma = s.eigenvalues[static_cast<std::size_t>(i)];
    if (sigma <= s.rank_tol) continue;
    // Top block v and bottom block u each have norm 1/sqrt(2), hence the 2.
    double ub = 0.0;
    for (int r = 0; r < d; ++r) ub += s.eigenvectors(k + r, i) * b[static_cast<std::size_t>(r)];
    const double c = 2.0 * ub / sigma;
    for (int r = 0; r < k; ++r) y[static_cast<std::size_t>(r)] += c * s.eigenvectors(r, i);
  }

  Vec x(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < k; ++i) axpy(y[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i)], x);
  return x;
}

Matrix to_dense(const SymmetricOperator& op) {
  const int d = op.dim();
  Matrix a(d, d);
  Vec e(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const Vec col = op.apply(e);
    for (int i = 0; i < d; ++i) a(i, j) = col[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return a;
}

}  // namespace symkry::oracle
