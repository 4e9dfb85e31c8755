#pragma once

// Matrix-free symmetric operator interface and the concrete operators shipped
// with the library.  Solvers touch A only through SymmetricOperator::apply,
// so singular and indefinite operators are first-class citizens; nothing here
// ever factorizes or inverts.

#include <array>
#include <cstdint>
#include <functional>
#include <utility>

#include "symkry/vec.hpp"

namespace symkry {

class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;

  virtual int dim() const = 0;

  // y = A x.  x and y have length dim(); implementations may assume y is
  // zero-initialized or overwrite it entirely.
  virtual void apply_into(std::span<const double> x, std::span<double> y) const = 0;

  Vec apply(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("SymmetricOperator::apply: vector length " +
                                  std::to_string(x.size()) + " does not match dim " +
                                  std::to_string(dim()));
    Vec y(x.size(), 0.0);
    apply_into(x, y);
    return y;
  }
};

class DiagonalOperator final : public SymmetricOperator {
 public:
  explicit DiagonalOperator(Vec entries) : d_(std::move(entries)) {
    if (d_.empty()) throw std::invalid_argument("DiagonalOperator: empty diagonal");
    if (!all_finite(d_)) throw std::invalid_argument("DiagonalOperator: non-finite entry");
  }

  int dim() const override { return static_cast<int>(d_.size()); }

  void apply_into(std::span<const double> x, std::span<double> y) const override {
    for (std::size_t i = 0; i < d_.size(); ++i) y[i] = d_[i] * x[i];
  }

  const Vec& entries() const { return d_; }

 private:
  Vec d_;
};

class DenseOperator final : public SymmetricOperator {
 public:
  // rel_defect: max_ij |a_ij - a_ji| / max_ij |a_ij|.  Construction rejects
  // visibly asymmetric input; use FunctionOperator to wrap anything else.
  explicit DenseOperator(Matrix a, double max_rel_defect = 1e-12)
      : a_(std::move(a)) {
    if (a_.rows != a_.cols) throw std::invalid_argument("DenseOperator: not square");
    if (a_.rows == 0) throw std::invalid_argument("DenseOperator: empty matrix");
    double defect = 0.0;
    for (int i = 0; i < a_.rows; ++i)
      for (int j = i + 1; j < a_.cols; ++j)
        defect = std::max(defect, std::abs(a_(i, j) - a_(j, i)));
    const double scale = max_abs(a_);
    if (scale > 0.0 && defect > max_rel_defect * scale)
      throw std::invalid_argument("DenseOperator: symmetry defect " + std::to_string(defect));
  }

  int dim() const override { return a_.rows; }

  void apply_into(std::span<const double> x, std::span<double> y) const override {
    for (int i = 0; i < a_.rows; ++i) {
      double s = 0.0;
      const double* row = &a_.a[static_cast<std::size_t>(i) * a_.cols];
      for (int j = 0; j < a_.cols; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
  }

  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

// Adapter for ad-hoc operators (tests, externally supplied callbacks).  No
// symmetry is enforced; symmetry_probe exists to measure exactly that.
class FunctionOperator final : public SymmetricOperator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  FunctionOperator(int dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {
    if (dim_ <= 0) throw std::invalid_argument("FunctionOperator: dim must be positive");
    if (!fn_) throw std::invalid_argument("FunctionOperator: null apply function");
  }

  int dim() const override { return dim_; }

  void apply_into(std::span<const double> x, std::span<double> y) const override {
    fn_(x, y);
  }

 private:
  int dim_;
  ApplyFn fn_;
};

// Five-point negated Laplacian on the (n+1) x (n+1) vertex grid of an n x n
// cell mesh, with pure Neumann boundaries closed by mirrored ghost points.
// Boundary rows carry the half / quarter control-volume weights that keep the
// matrix symmetric; the null space is exactly the constant vector and the
// operator is positive semi-definite (it is a weighted graph Laplacian
// scaled by 1/h^2).
class PoissonNeumannOperator final : public SymmetricOperator {
 public:
  explicit PoissonNeumannOperator(int grid_n, double h);

  int dim() const override { return (n_ + 1) * (n_ + 1); }

  void apply_into(std::span<const double> x, std::span<double> y) const override;

  int grid_n() const { return n_; }
  double h() const { return h_; }

 private:
  int n_;
  double h_;
};

struct PoissonProblem {
  PoissonNeumannOperator op;
  Vec rhs;
  // Node coordinates, row-major over (j, i) with x varying fastest.
  Vec node_x, node_y;
};

// Discretizes -lap(u) = f on [x0,x1] x [y0,y1] with Neumann data
// <grad u, n> = g.  Each node's source term is the mean of f over its
// (clipped) control volume, by adaptive Gauss quadrature, times the volume
// weight; a point sample would let one steep or integrably singular spot of
// f dominate the rhs.  g is sampled at boundary nodes and folded into the
// right-hand side with the 1/h flux scaling.  The resulting system is
// consistent exactly when the discrete compatibility sum <rhs, 1> vanishes.
PoissonProblem assemble_poisson_neumann(
    int grid_n, const std::array<double, 4>& domain,
    const std::function<double(double, double)>& f,
    const std::function<double(double, double)>& g);

// Max over `trials` random unit pairs (u, v) of |<u, Av> - <Au, v>|.
// The caller compares against a tolerance scaled by an operator norm
// estimate; for an exactly symmetric operator the probe returns round-off.
double symmetry_probe(const SymmetricOperator& op, int trials, std::uint64_t seed);

}  // namespace symkry
