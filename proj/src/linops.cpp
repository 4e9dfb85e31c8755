#include "symkry/linops.hpp"

#include <cmath>

#include "symkry/rng.hpp"

namespace symkry {

PoissonNeumannOperator::PoissonNeumannOperator(int grid_n, double h)
    : n_(grid_n), h_(h) {
  if (grid_n < 2) throw std::invalid_argument("PoissonNeumannOperator: grid_n must be >= 2");
  if (!(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("PoissonNeumannOperator: h must be positive");
}

void PoissonNeumannOperator::apply_into(std::span<const double> x,
                                        std::span<double> y) const {
  const int n = n_;
  const int nn = n + 1;
  const double inv_h2 = 1.0 / (h_ * h_);
  auto idx = [nn](int i, int j) { return static_cast<std::size_t>(j) * nn + i; };

  // Weighted graph Laplacian: the edge between two horizontally adjacent
  // nodes has weight 1/2 when it lies on the top or bottom boundary row
  // (half control volume), 1 otherwise; same for vertical edges on the left
  // and right columns.
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double c = x[idx(i, j)];
      double acc = 0.0;
      if (i > 0) {
        const double w = (j == 0 || j == n) ? 0.5 : 1.0;
        acc += w * (c - x[idx(i - 1, j)]);
      }
      if (i < n) {
        const double w = (j == 0 || j == n) ? 0.5 : 1.0;
        acc += w * (c - x[idx(i + 1, j)]);
      }
      if (j > 0) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * (c - x[idx(i, j - 1)]);
      }
      if (j < n) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * (c - x[idx(i, j + 1)]);
      }
      y[idx(i, j)] = acc * inv_h2;
    }
  }
}

namespace {

// 4-point Gauss-Legendre rule on (-1/2, 1/2); weights sum to 1.
constexpr double kGauss4X[4] = {-0.43056815579702629, -0.16999052179242816,
                                0.16999052179242816, 0.43056815579702629};
constexpr double kGauss4W[4] = {0.17392742256872692, 0.32607257743127305,
                                0.32607257743127305, 0.17392742256872692};

// Mean of f over [ax, bx] x [ay, by] by composite tensor Gauss quadrature,
// doubling the subdivision until two levels agree.  The source row of the
// control-volume balance needs the cell mean, not a point sample: sources
// with steep or integrably singular spots would otherwise put one huge
// sample into the rhs.  Smooth cells exit at the first comparison.
double cell_mean_f(const std::function<double(double, double)>& f,
                   double ax, double bx, double ay, double by) {
  double prev = 0.0;
  for (int c = 1; c <= 64; c *= 2) {
    const double sx = (bx - ax) / c;
    const double sy = (by - ay) / c;
    double acc = 0.0;
    for (int u = 0; u < c; ++u)
      for (int v = 0; v < c; ++v) {
        const double cx = ax + (u + 0.5) * sx;
        const double cy = ay + (v + 0.5) * sy;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            acc += kGauss4W[a] * kGauss4W[b] * f(cx + kGauss4X[a] * sx, cy + kGauss4X[b] * sy);
      }
    acc /= static_cast<double>(c) * c;
    if (c > 1 && std::abs(acc - prev) <= 1e-6 * (1.0 + std::abs(acc))) return acc;
    prev = acc;
  }
  return prev;
}

}  // namespace

PoissonProblem assemble_poisson_neumann(
    int grid_n, const std::array<double, 4>& domain,
    const std::function<double(double, double)>& f,
    const std::function<double(double, double)>& g) {
  const double x0 = domain[0], x1 = domain[1], y0 = domain[2], y1 = domain[3];
  if (!(x1 > x0) || !(y1 > y0))
    throw std::invalid_argument("assemble_poisson_neumann: degenerate domain");
  const double hx = (x1 - x0) / grid_n;
  const double hy = (y1 - y0) / grid_n;
  // The stencil assumes square cells; reject domains that are not.
  if (std::abs(hx - hy) > 1e-12 * std::max(std::abs(hx), std::abs(hy)))
    throw std::invalid_argument("assemble_poisson_neumann: domain must have square cells");
  const double h = hx;

  PoissonNeumannOperator op(grid_n, h);
  const int n = grid_n;
  const int nn = n + 1;
  Vec rhs(static_cast<std::size_t>(nn) * nn, 0.0);
  Vec xs(rhs.size()), ys(rhs.size());
  auto idx = [nn](int i, int j) { return static_cast<std::size_t>(j) * nn + i; };

  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double px = x0 + i * h;
      const double py = y0 + j * h;
      xs[idx(i, j)] = px;
      ys[idx(i, j)] = py;

      const bool bx = (i == 0 || i == n);
      const bool by = (j == 0 || j == n);
      // Control-volume weight: 1 interior, 1/2 edge, 1/4 corner.  The source
      // term is the mean of f over the node's (clipped) control volume; the
      // weight is exactly that volume's area over h^2.
      const double w = (bx ? 0.5 : 1.0) * (by ? 0.5 : 1.0);
      const double ax = std::max(px - 0.5 * h, x0), bx2 = std::min(px + 0.5 * h, x1);
      const double ay = std::max(py - 0.5 * h, y0), by2 = std::min(py + 0.5 * h, y1);
      double v = w * cell_mean_f(f, ax, bx2, ay, by2);
      // Boundary flux: an edge node owns a boundary segment of length h, a
      // corner owns h/2 per touched side.  After the 1/h^2 row scaling shared
      // with the operator that is g/h per full segment; g is sampled once per
      // node and stands in for the flux density on every touched side.
      if (bx) v += (by ? 0.5 : 1.0) * g(px, py) / h;
      if (by) v += (bx ? 0.5 : 1.0) * g(px, py) / h;
      if (!std::isfinite(v))
        throw std::invalid_argument("assemble_poisson_neumann: non-finite sample at node");
      rhs[idx(i, j)] = v;
    }
  }
  return PoissonProblem{op, std::move(rhs), std::move(xs), std::move(ys)};
}

double symmetry_probe(const SymmetricOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("symmetry_probe: trials must be >= 1");
  const int d = op.dim();
  rng::Xoshiro256pp gen(seed, /*stream=*/0x5f);
  double worst = 0.0;
  Vec u(d), v(d);
  for (int t = 0; t < trials; ++t) {
    for (auto& e : u) e = gen.normal();
    for (auto& e : v) e = gen.normal();
    const double nu = norm2(u), nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) continue;  // overwhelmingly unlikely
    scale(1.0 / nu, u);
    scale(1.0 / nv, v);
    const Vec au = op.apply(u);
    const Vec av = op.apply(v);
    worst = std::max(worst, std::abs(dot(u, av) - dot(au, v)));
  }
  return worst;
}

}  // namespace symkry
