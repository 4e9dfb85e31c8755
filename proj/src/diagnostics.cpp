#include "symkry/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "symkry/rng.hpp"

namespace symkry {

namespace {

constexpr double kPowerTol = 1e-6;
constexpr int kPowerMaxIter = 10000;

// Prefix spectral norms of a growing symmetric matrix: after each added
// column, append ||G restricted to the leading (k+1) x (k+1) block||_2.
// G is passed dense over the final size; entries beyond the prefix are
// ignored.  Power iteration is warm-started from the previous prefix vector,
// which converges in a handful of sweeps.
std::vector<double> prefix_spectral_norms(const Matrix& g) {
  const int n = g.rows;
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  rng::Xoshiro256pp gen(0x5ca1ab1e, 0);
  Vec v(static_cast<std::size_t>(n), 0.0);
  for (auto& e : v) e = gen.normal();

  Vec w(static_cast<std::size_t>(n), 0.0);
  for (int k = 1; k <= n; ++k) {
    // Normalize the active prefix of v.
    double nv = 0.0;
    for (int i = 0; i < k; ++i) nv += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    nv = std::sqrt(nv);
    if (nv == 0.0) {
      v[static_cast<std::size_t>(k - 1)] = 1.0;
      nv = 1.0;
    }
    for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] /= nv;

    double prev = 0.0;
    for (int it = 0; it < kPowerMaxIter; ++it) {
      // w = G[0:k,0:k] v; iterate on G^2 by applying twice (G symmetric).
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < k; ++i) {
          double s = 0.0;
          for (int j = 0; j < k; ++j) s += g(i, j) * v[static_cast<std::size_t>(j)];
          w[static_cast<std::size_t>(i)] = s;
        }
        for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)];
      }
      double nn = 0.0;
      for (int i = 0; i < k; ++i) nn += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
      nn = std::sqrt(nn);
      if (nn == 0.0) {
        prev = 0.0;
        break;
      }
      for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] /= nn;
      const double est = std::sqrt(nn);  // sqrt of the G^2 Rayleigh growth
      if (std::abs(est - prev) <= kPowerTol * std::max(est, 1e-300)) {
        prev = est;
        break;
      }
      prev = est;
    }
    out[static_cast<std::size_t>(k - 1)] = prev;
  }
  return out;
}

Vec normalized_or_zero(const Vec& v) {
  const double n = norm2(v);
  if (n == 0.0) return Vec(v.size(), 0.0);
  return scaled(v, 1.0 / n);
}

}  // namespace

StabilityReport stability_metrics(const IterationTrace& trace, Method method,
                                  const SymmetricOperator& op) {
  if (!trace.vectors_recorded)
    throw std::invalid_argument("stability_metrics: trace has no recorded vectors");
  const int n = static_cast<int>(trace.rows.size());
  if (n == 0) throw std::invalid_argument("stability_metrics: empty trace");

  StabilityReport rep;
  rep.method = method;

  // Column families for the two Gram matrices.
  std::vector<Vec> ortho_cols, conj_cols;
  Vec conj_diag(static_cast<std::size_t>(n), 0.0);
  ortho_cols.reserve(static_cast<std::size_t>(n));
  conj_cols.reserve(static_cast<std::size_t>(n));

  if (method == Method::CG) {
    if (static_cast<int>(trace.r.size()) != n || static_cast<int>(trace.p.size()) != n)
      throw std::invalid_argument("stability_metrics: trace vector series incomplete");
    for (int k = 0; k < n; ++k) {
      ortho_cols.push_back(normalized_or_zero(trace.r[static_cast<std::size_t>(k)]));
      conj_cols.push_back(trace.p[static_cast<std::size_t>(k)]);  // raw directions
    }
  } else {
    // CR and MINRES: orthogonality lives in the A p family; for MINRES the
    // recorded update steps stand in for p and need a fresh A application.
    if (static_cast<int>(trace.r.size()) != n || static_cast<int>(trace.p.size()) != n)
      throw std::invalid_argument("stability_metrics: trace vector series incomplete");
    if (method == Method::CR && static_cast<int>(trace.ap.size()) != n)
      throw std::invalid_argument("stability_metrics: trace vector series incomplete");
    for (int k = 0; k < n; ++k) {
      Vec apk = (method == Method::CR) ? trace.ap[static_cast<std::size_t>(k)]
                                       : op.apply(trace.p[static_cast<std::size_t>(k)]);
      ortho_cols.push_back(normalized_or_zero(apk));
      conj_cols.push_back(trace.r[static_cast<std::size_t>(k)]);
    }
  }

  // Gram matrices.  A zero column carries no basis direction (the MINRES
  // step at k = 0, or a tie-break iteration with no progress); it contributes
  // nothing rather than a spurious unit defect.
  Matrix ortho_defect(n, n);
  for (int i = 0; i < n; ++i) {
    const bool active_i = norm2(ortho_cols[static_cast<std::size_t>(i)]) > 0.0;
    for (int j = i; j < n; ++j) {
      double v = -dot(ortho_cols[static_cast<std::size_t>(i)], ortho_cols[static_cast<std::size_t>(j)]);
      if (i == j) v = active_i ? 1.0 + v : 0.0;
      ortho_defect(i, j) = v;
      ortho_defect(j, i) = v;
    }
  }

  // conj defect: diag(<c_i, A c_i>) - C^T A C, evaluated with fresh A c_j.
  std::vector<Vec> a_conj;
  a_conj.reserve(conj_cols.size());
  for (const Vec& c : conj_cols) a_conj.push_back(op.apply(c));
  Matrix conj_defect(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = dot(conj_cols[static_cast<std::size_t>(i)], a_conj[static_cast<std::size_t>(j)]);
      const double d = (i == j) ? 0.0 : -v;  // diagonal cancels exactly
      conj_defect(i, j) = d;
      conj_defect(j, i) = d;
    }

  rep.ortho_loss = prefix_spectral_norms(ortho_defect);
  rep.conj_loss = prefix_spectral_norms(conj_defect);
  return rep;
}

double residual_gap(const SymmetricOperator& op, const Vec& b, const Vec& x, const Vec& r) {
  Vec gap = op.apply(x);
  if (gap.size() != b.size() || r.size() != b.size())
    throw std::invalid_argument("residual_gap: size mismatch");
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = b[i] - gap[i] - r[i];
  return norm2(gap);
}

double spectral_norm(const Matrix& m, std::uint64_t seed) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  for (double e : m.a)
    if (!std::isfinite(e)) throw std::invalid_argument("spectral_norm: non-finite entry");

  rng::Xoshiro256pp gen(seed, /*stream=*/0x9d);
  Vec v(static_cast<std::size_t>(m.cols));
  for (auto& e : v) e = gen.normal();
  double nv = norm2(v);
  if (nv == 0.0) {
    v[0] = 1.0;
    nv = 1.0;
  }
  scale(1.0 / nv, v);

  const Matrix mt = transpose(m);
  double prev = 0.0;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    Vec w = matvec(m, v);
    Vec u = matvec(mt, w);
    const double nu = norm2(u);
    if (nu == 0.0) return 0.0;
    scale(1.0 / nu, u);
    v = std::move(u);
    const double est = std::sqrt(nu);
    if (std::abs(est - prev) <= kPowerTol * std::max(est, 1e-300)) return est;
    prev = est;
  }
  return prev;
}

std::vector<IterationRecord> trace_records(const IterationTrace& trace,
                                           const std::vector<double>* errors) {
  if (errors && errors->size() != trace.rows.size())
    throw std::invalid_argument("trace_records: error series length mismatch");
  std::vector<IterationRecord> out;
  out.reserve(trace.rows.size());
  const double bn = trace.b_norm > 0 ? trace.b_norm : 1.0;
  const double abn = trace.ab_norm > 0 ? trace.ab_norm : 1.0;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    IterationRecord rec;
    rec.k = row.k;
    rec.rel_r = row.r_norm / bn;
    rec.rel_Ar = row.ar_norm / abn;
    rec.rel_Ap = row.ap_norm / abn;
    rec.curvature = row.curvature;
    rec.residual_gap = row.residual_gap;
    if (errors) rec.error_vs_truth = (*errors)[i];
    out.push_back(rec);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << "k,rel_r,rel_Ar,rel_Ap,curvature,residual_gap,error_vs_truth\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) return;  // empty cell
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (const IterationRecord& r : records) {
    out << r.k << ',';
    put(r.rel_r);
    out << ',';
    put(r.rel_Ar);
    out << ',';
    put(r.rel_Ap);
    out << ',';
    put(r.curvature);
    out << ',';
    put(r.residual_gap);
    out << ',';
    if (r.error_vs_truth) put(*r.error_vs_truth);
    out << '\n';
  }
}

}  // namespace symkry
