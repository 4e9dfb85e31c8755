#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "symkry/diagnostics.hpp"
#include "symkry/oracle.hpp"
#include "symkry/rng.hpp"
#include "symkry/synth.hpp"

using namespace symkry;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix diag_matrix(const Vec& entries) {
  const int d = static_cast<int>(entries.size());
  Matrix a(d, d);
  for (int i = 0; i < d; ++i) a(i, i) = entries[static_cast<std::size_t>(i)];
  return a;
}

Matrix random_symmetric(int d, std::uint64_t seed) {
  rng::Xoshiro256pp gen(seed, 0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = gen.normal();
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

// Minimal recorded trace: n states with the given residual and direction
// columns, enough for stability_metrics to accept it.
IterationTrace recorded_trace(const std::vector<Vec>& r, const std::vector<Vec>& p,
                              const std::vector<Vec>& ap) {
  IterationTrace t;
  t.b_norm = 1.0;
  t.ab_norm = 1.0;
  t.vectors_recorded = true;
  t.rows.resize(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) t.rows[k].k = static_cast<int>(k);
  t.r = r;
  t.p = p;
  t.ap = ap;
  t.x.assign(r.size(), Vec(r.empty() ? 0 : r[0].size(), 0.0));
  return t;
}

}  // namespace

TEST_CASE("spectral norm of simple matrices") {
  Matrix eye(5, 5);
  for (int i = 0; i < 5; ++i) eye(i, i) = 1.0;
  CHECK(spectral_norm(eye) == doctest::Approx(1.0).epsilon(1e-6));

  CHECK(spectral_norm(diag_matrix(Vec{2.0, -3.0})) == doctest::Approx(3.0).epsilon(1e-6));

  Matrix zero(3, 3);
  CHECK(spectral_norm(zero) == 0.0);

  Matrix empty(0, 0);
  CHECK(spectral_norm(empty) == 0.0);
}

TEST_CASE("spectral norm matches the dense eigensolver") {
  const Matrix a = random_symmetric(8, 42);
  const oracle::SpectralData s = oracle::eig_symmetric(a);
  double lam_max = 0.0;
  for (double lam : s.eigenvalues) lam_max = std::max(lam_max, std::abs(lam));
  CHECK(spectral_norm(a, 7) == doctest::Approx(lam_max).epsilon(1e-6));
  // Seed only changes the start vector, not the limit.
  CHECK(spectral_norm(a, 123) == doctest::Approx(lam_max).epsilon(1e-6));
}

TEST_CASE("spectral norm rejects non-finite entries") {
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = kNaN;
  CHECK_THROWS_AS(spectral_norm(a), std::invalid_argument);
}

TEST_CASE("rectangular spectral norm uses singular values") {
  // [[3, 0], [0, 0], [0, 4]]: singular values {3, 4}.
  Matrix a(3, 2);
  a(0, 0) = 3.0;
  a(2, 1) = 4.0;
  CHECK(spectral_norm(a) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("orthogonality loss for duplicated residual columns") {
  // Three copies of one unit vector: the normalized Gram matrix is all ones.
  // Prefix defects I - G have spectral norms 0, 1, 2.
  Vec u{1.0, 0.0};
  DiagonalOperator op(Vec{1.0, 1.0});
  IterationTrace t = recorded_trace({u, u, u}, {u, u, u}, {});
  StabilityReport rep = stability_metrics(t, Method::CG, op);
  REQUIRE(rep.ortho_loss.size() == 3);
  CHECK(rep.ortho_loss[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.ortho_loss[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.ortho_loss[2] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("conjugacy loss vanishes for conjugate directions") {
  // Distinct coordinate directions are exactly A-conjugate under a diagonal
  // operator, while the duplicated residual columns keep ortho_loss busy.
  DiagonalOperator op(Vec{2.0, 5.0, 7.0});
  Vec e0{1.0, 0.0, 0.0}, e1{0.0, 1.0, 0.0}, e2{0.0, 0.0, 1.0};
  IterationTrace t = recorded_trace({e0, e0, e0}, {e0, e1, e2}, {});
  StabilityReport rep = stability_metrics(t, Method::CG, op);
  REQUIRE(rep.conj_loss.size() == 3);
  for (double v : rep.conj_loss) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("conjugacy loss reports the off-diagonal mass") {
  // p_0 = e0, p_1 = e0 + e1 under diag(2, 5): <p_0, A p_1> = 2, so the
  // 2 x 2 defect is [[0, -2], [-2, 0]] with spectral norm 2.
  DiagonalOperator op(Vec{2.0, 5.0});
  Vec e0{1.0, 0.0}, p1{1.0, 1.0};
  IterationTrace t = recorded_trace({e0, e0}, {e0, p1}, {});
  StabilityReport rep = stability_metrics(t, Method::CG, op);
  REQUIRE(rep.conj_loss.size() == 2);
  CHECK(rep.conj_loss[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.conj_loss[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("residual orthogonality ignores column scale") {
  // Columns are normalized before the Gram matrix, so a huge duplicate is
  // just as guilty as a unit one.
  Vec u{1.0, 0.0};
  DiagonalOperator op(Vec{1.0, 1.0});
  IterationTrace t = recorded_trace({u, scaled(u, 1e12)}, {u, u}, {});
  StabilityReport rep = stability_metrics(t, Method::CG, op);
  CHECK(rep.ortho_loss[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cr metrics use the recorded ap columns") {
  // For CR the orthogonal family is A p_k.  Identical ap columns show up as
  // ortho loss even when the p columns themselves are orthogonal.
  DiagonalOperator op(Vec{1.0, 1.0});
  Vec u{1.0, 0.0}, v{0.0, 1.0};
  IterationTrace t = recorded_trace({u, v}, {u, v}, {u, u});
  StabilityReport rep = stability_metrics(t, Method::CR, op);
  REQUIRE(rep.ortho_loss.size() == 2);
  CHECK(rep.ortho_loss[1] == doctest::Approx(1.0).epsilon(1e-6));
  // Conjugacy family is r: orthogonal eigenvector residuals are conjugate.
  CHECK(rep.conj_loss[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stability metrics validate the trace") {
  DiagonalOperator op(Vec{1.0, 1.0});
  Vec u{1.0, 0.0};

  IterationTrace unrecorded;
  unrecorded.rows.resize(1);
  CHECK_THROWS_AS(stability_metrics(unrecorded, Method::CG, op), std::invalid_argument);

  IterationTrace empty;
  empty.vectors_recorded = true;
  CHECK_THROWS_AS(stability_metrics(empty, Method::CG, op), std::invalid_argument);

  // Row count and vector series length must agree.
  IterationTrace ragged = recorded_trace({u, u}, {u}, {});
  ragged.rows.resize(2);
  CHECK_THROWS_AS(stability_metrics(ragged, Method::CG, op), std::invalid_argument);

  // CR needs the ap series as well.
  IterationTrace no_ap = recorded_trace({u}, {u}, {});
  CHECK_THROWS_AS(stability_metrics(no_ap, Method::CR, op), std::invalid_argument);
}

TEST_CASE("residual gap measures recurrence drift") {
  DiagonalOperator op(Vec{2.0, 3.0});
  Vec b{1.0, 1.0}, x{1.0, 1.0};
  Vec r_true{-1.0, -2.0};
  CHECK(residual_gap(op, b, x, r_true) == 0.0);

  Vec r_zero{0.0, 0.0};
  CHECK(residual_gap(op, b, x, r_zero) == doctest::Approx(std::sqrt(5.0)));

  Vec short_r{0.0};
  CHECK_THROWS_AS(residual_gap(op, b, x, short_r), std::invalid_argument);
}

TEST_CASE("trace records divide by the cached norms") {
  IterationTrace t;
  t.b_norm = 2.0;
  t.ab_norm = 4.0;
  t.rows.push_back(TraceRow{0, 1.0, 2.0, 3.0, 5.0, 0.25});
  t.rows.push_back(TraceRow{1, 0.5, 1.0, kNaN, -1.0, 0.0});

  std::vector<IterationRecord> recs = trace_records(t);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].k == 0);
  CHECK(recs[0].rel_r == 0.5);
  CHECK(recs[0].rel_Ar == 0.5);
  CHECK(recs[0].rel_Ap == 0.75);
  CHECK(recs[0].curvature == 5.0);
  CHECK(recs[0].residual_gap == 0.25);
  CHECK_FALSE(recs[0].error_vs_truth.has_value());
  CHECK(recs[1].rel_r == 0.25);
  CHECK(std::isnan(recs[1].rel_Ap));

  std::vector<double> errs{0.125, 0.0625};
  recs = trace_records(t, &errs);
  REQUIRE(recs[0].error_vs_truth.has_value());
  CHECK(*recs[0].error_vs_truth == 0.125);
  CHECK(*recs[1].error_vs_truth == 0.0625);

  std::vector<double> wrong_len{1.0};
  CHECK_THROWS_AS(trace_records(t, &wrong_len), std::invalid_argument);
}

TEST_CASE("zero norms fall back to unit scaling") {
  IterationTrace t;
  t.rows.push_back(TraceRow{0, 3.0, 7.0, 0.0, 0.0, 0.0});
  std::vector<IterationRecord> recs = trace_records(t);
  CHECK(recs[0].rel_r == 3.0);
  CHECK(recs[0].rel_Ar == 7.0);
}

TEST_CASE("csv serialization is stable") {
  std::vector<IterationRecord> recs;
  IterationRecord a;
  a.k = 0;
  a.rel_r = 0.5;
  a.rel_Ar = 0.25;
  a.rel_Ap = kNaN;
  a.curvature = kNaN;
  a.residual_gap = 0.0;
  a.error_vs_truth = 0.125;
  recs.push_back(a);
  IterationRecord b;
  b.k = 1;
  b.rel_r = 1e-9;
  b.rel_Ar = 2.0;
  b.rel_Ap = 3.0;
  b.curvature = -1.5;
  b.residual_gap = 1.0 / 3.0;
  recs.push_back(b);

  std::ostringstream out;
  write_trace_csv(out, recs);
  CHECK(out.str() ==
        "k,rel_r,rel_Ar,rel_Ap,curvature,residual_gap,error_vs_truth\n"
        "0,0.5,0.25,,,0,0.125\n"
        "1,1.0000000000000001e-09,2,3,-1.5,0.33333333333333331,\n");
}

TEST_CASE("metrics on a recorded cg run stay at round-off") {
  synth::SynthSpec spec;
  spec.d = 8;
  spec.m = 0;
  spec.family = synth::Family::PSD;
  spec.seed = 77;
  DiagonalOperator op = synth::gen_matrix(spec);
  Vec b = synth::gen_rhs(spec.d, spec.seed);

  SolverOptions opts;
  opts.record_vectors = true;
  SolveReport rep = cg_solve(op, b, opts);
  REQUIRE(rep.termination == EventKind::ConvergedResidual);

  StabilityReport stab = stability_metrics(rep.trace, Method::CG, op);
  REQUIRE(stab.ortho_loss.size() == rep.trace.rows.size());
  REQUIRE(stab.conj_loss.size() == rep.trace.rows.size());
  // The converged state's residual is round-off; its normalized column points
  // anywhere, so orthogonality is only meaningful over the earlier prefixes.
  for (std::size_t k = 0; k + 1 < stab.ortho_loss.size(); ++k) {
    REQUIRE(rep.trace.rows[k].r_norm > 1e-6 * rep.trace.b_norm);
    CHECK(stab.ortho_loss[k] <= 1e-6);
  }
  for (double v : stab.conj_loss) CHECK(v <= 1e-6);

  // The recurrence residual tracks the true residual on a short run.
  for (std::size_t k = 0; k < rep.trace.rows.size(); ++k) {
    const double gap = residual_gap(op, b, rep.trace.x[k], rep.trace.r[k]);
    CHECK(gap <= 1e-10 * rep.trace.b_norm);
    CHECK(rep.trace.rows[k].residual_gap == doctest::Approx(gap).epsilon(1e-9));
  }
}

TEST_CASE("metrics on a recorded minres run handle the zero step") {
  synth::SynthSpec spec;
  spec.d = 8;
  spec.m = 2;
  spec.family = synth::Family::PSD;
  spec.seed = 77;
  DiagonalOperator op = synth::gen_matrix(spec);
  Vec b = synth::gen_rhs(spec.d, spec.seed);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (op.entries()[i] == 0.0) b[i] = 0.0;

  SolverOptions opts;
  opts.record_vectors = true;
  SolveReport rep = minres_solve(op, b, opts);
  REQUIRE(rep.termination == EventKind::ConvergedResidual);

  StabilityReport stab = stability_metrics(rep.trace, Method::MINRES, op);
  REQUIRE(stab.ortho_loss.size() == rep.trace.rows.size());
  // State 0 has no update step yet: the zero column must not count as a
  // defect of size one.
  CHECK(stab.ortho_loss[0] == 0.0);
  for (double v : stab.ortho_loss) CHECK(v <= 1e-6);
  for (double v : stab.conj_loss) CHECK(v <= 1e-6);
}

TEST_CASE("metrics on a recorded cr run use recorded ap") {
  synth::SynthSpec spec;
  spec.d = 8;
  spec.m = 0;
  spec.family = synth::Family::PSD;
  spec.seed = 31;
  DiagonalOperator op = synth::gen_matrix(spec);
  Vec b = synth::gen_rhs(spec.d, spec.seed);

  SolverOptions opts;
  opts.record_vectors = true;
  SolveReport rep = cr_solve(op, b, opts);
  REQUIRE(rep.termination == EventKind::ConvergedResidual);
  REQUIRE(rep.trace.ap.size() == rep.trace.rows.size());

  StabilityReport stab = stability_metrics(rep.trace, Method::CR, op);
  // Same prefix scoping as the CG case: the converged state's A p column is
  // normalized round-off.
  for (std::size_t k = 0; k + 1 < stab.ortho_loss.size(); ++k)
    CHECK(stab.ortho_loss[k] <= 1e-6);
  for (double v : stab.conj_loss) CHECK(v <= 1e-6);
}
