#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symkry/oracle.hpp"
#include "symkry/rng.hpp"
#include "symkry/synth.hpp"

using namespace symkry;
using namespace symkry::oracle;

namespace {

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

}  // namespace

TEST_CASE("eigendecomposition of a diagonal matrix is exact") {
  const SpectralData s = eig_symmetric(diag_matrix({3.0, 1.0, 2.0}));
  CHECK(s.eigenvalues == Vec{1.0, 2.0, 3.0});
  // Eigenvector columns are signed unit vectors permuted into order.
  for (int i = 0; i < 3; ++i) {
    int nonzeros = 0;
    for (int r = 0; r < 3; ++r)
      if (s.eigenvectors(r, i) != 0.0) ++nonzeros;
    CHECK(nonzeros == 1);
  }
  CHECK(std::abs(s.eigenvectors(1, 0)) == 1.0);  // lambda = 1 lives at index 1
  CHECK(s.rank_tol > 0.0);
  CHECK(s.rank_tol < 1e-12);
}

TEST_CASE("eigendecomposition of the 2x2 exchange matrix") {
  Matrix a(2, 2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  const SpectralData s = eig_symmetric(a);
  CHECK(s.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(s.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("random symmetric matrices reconstruct from their eigenpairs") {
  const Matrix a = random_symmetric(8, 11);
  const SpectralData s = eig_symmetric(a);

  const Matrix vt = transpose(s.eigenvectors);
  const Matrix gram = matmul(vt, s.eigenvectors);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(gram(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

  const Matrix rebuilt = matmul(s.eigenvectors, matmul(diag_matrix(s.eigenvalues), vt));
  const double scale = max_abs(a);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(std::abs(rebuilt(i, j) - a(i, j)) <= 1e-12 * scale);
}

TEST_CASE("eigendecomposition rejects bad input") {
  CHECK_THROWS_AS((void)eig_symmetric(Matrix(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS((void)eig_symmetric(Matrix(0, 0)), std::invalid_argument);
  Matrix asym(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS((void)eig_symmetric(asym), std::invalid_argument);
}

TEST_CASE("pseudo-inverse solution drops the null space") {
  const Matrix a = diag_matrix({1.0, 2.0, 0.0});
  const Vec x = pseudo_inverse_solution(a, Vec{1.0, 1.0, 1.0});
  CHECK(x == Vec{1.0, 0.5, 0.0});

  const SpectralData s = eig_symmetric(a);
  CHECK(pseudo_inverse_solution(s, Vec{1.0, 1.0, 1.0}) == x);
  CHECK_THROWS_AS((void)pseudo_inverse_solution(s, Vec{1.0}), std::invalid_argument);

  // Rank-1 matrix with an oblique null space: ones(2,2)/full analysis gives
  // A^+ b = (1/4, 1/4) for b = e_0.
  Matrix ones(2, 2);
  ones(0, 0) = ones(0, 1) = ones(1, 0) = ones(1, 1) = 1.0;
  const Vec y = pseudo_inverse_solution(ones, Vec{1.0, 0.0});
  CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("orthogonal decomposition splits b against Range(A)") {
  const Matrix a = diag_matrix({1.0, 0.0});
  const OrthoParts parts = ortho_decompose(a, Vec{1.0, 1.0});
  CHECK(parts.b_range == Vec{1.0, 0.0});
  CHECK(parts.b_null == Vec{0.0, 1.0});

  // Oblique null space: ones(2,2) annihilates (1,-1)/sqrt(2).
  Matrix ones(2, 2);
  ones(0, 0) = ones(0, 1) = ones(1, 0) = ones(1, 1) = 1.0;
  const OrthoParts p2 = ortho_decompose(ones, Vec{1.0, 0.0});
  CHECK(p2.b_null[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p2.b_null[1] == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(norm2(sub(add(p2.b_range, p2.b_null), Vec{1.0, 0.0})) <= 1e-15);
  CHECK(norm2(matvec(ones, p2.b_null)) <= 1e-14);
  CHECK(std::abs(dot(p2.b_range, p2.b_null)) <= 1e-14);
}

TEST_CASE("relevant eigenvalues cluster and filter by b") {
  const Matrix a = diag_matrix({2.0, 2.0, 0.0, 5.0});
  const auto rel = relevant_eigenvalues(a, Vec{1.0, 1.0, 1.0, 0.0});
  REQUIRE(rel.size() == 2);
  CHECK(rel[0].first == doctest::Approx(0.0));
  CHECK(rel[0].second == doctest::Approx(1.0));
  CHECK(rel[1].first == doctest::Approx(2.0));
  CHECK(rel[1].second == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("grade agrees between Krylov rank and spectrum") {
  CHECK(grade(diag_matrix({2.0, 2.0, 0.0, 5.0}), Vec{1.0, 1.0, 1.0, 0.0}) == 2);
  CHECK(grade(diag_matrix({1.0, 2.0, 3.0}), Vec{1.0, 1.0, 1.0}) == 3);
  CHECK_THROWS_AS((void)grade(diag_matrix({1.0}), Vec{0.0}), std::invalid_argument);

  // Dense cross-check against the structural diagonal formula, on spectra
  // whose Krylov bases shrink hard enough that double-precision rank
  // detection reports phantom directions.
  struct Case { int d; int m; std::uint64_t seed; };
  for (Case c : {Case{30, 7, 17}, Case{30, 3, 8}, Case{30, 3, 19}, Case{20, 3, 4}}) {
    const Vec entries =
        synth::gen_matrix(synth::SynthSpec{c.d, c.m, synth::Family::PSD, c.seed}).entries();
    const Vec b = synth::gen_rhs(c.d, c.seed);
    CHECK(grade(diag_matrix(entries), b) == diagonal_grade(entries, b));
  }
}

TEST_CASE("diagonal grade counts distinct entries where b is nonzero") {
  CHECK(diagonal_grade(Vec{1.0, 1.0, 2.0, 0.0, 0.0}, Vec{1.0, 0.0, 1.0, 1.0, 0.0}) == 3);
  CHECK(diagonal_grade(Vec{1.0, 2.0, 0.0}, Vec{1.0, 1.0, 0.0}) == 2);
  CHECK(diagonal_grade(Vec{5.0, 5.0}, Vec{1.0, 1.0}) == 1);
  CHECK_THROWS_AS((void)diagonal_grade(Vec{1.0}, Vec{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)diagonal_grade(Vec{1.0}, Vec{0.0}), std::invalid_argument);
}

TEST_CASE("Krylov least squares minimizes over the growing subspace") {
  // k = 1 is the one-dimensional projection alpha = <Ab, b> / ||Ab||^2.
  const Matrix a = diag_matrix({1.0, 0.0, 3.0});
  const Vec b = {1.0, 1.0, 1.0};
  const Vec x1 = krylov_least_squares(a, b, 1);
  for (int i = 0; i < 3; ++i)
    CHECK(x1[static_cast<std::size_t>(i)] == doctest::Approx(0.4).epsilon(1e-12));

  // At the grade the minimizer is the pseudo-inverse solution, consistent
  // or not.
  const Matrix s = diag_matrix({1.0, 0.0});
  const Vec xs = krylov_least_squares(s, Vec{1.0, 1.0}, 2);
  CHECK(xs[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(xs[1] == doctest::Approx(0.0).epsilon(1e-10));

  const Vec entries = synth::gen_matrix(synth::SynthSpec{8, 3, synth::Family::PSD, 23}).entries();
  const Vec rb = synth::gen_rhs(8, 23);
  const Matrix da = diag_matrix(entries);
  const int g = diagonal_grade(entries, rb);
  const Vec at_grade = krylov_least_squares(da, rb, g);
  const Vec dagger = pseudo_inverse_solution(da, rb);
  CHECK(norm2(sub(at_grade, dagger)) <= 1e-8 * norm2(dagger));

  CHECK_THROWS_AS((void)krylov_least_squares(da, rb, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)krylov_least_squares(da, rb, g + 1), std::invalid_argument);
}

TEST_CASE("dense assembly reproduces an operator column by column") {
  const Matrix d = to_dense(DiagonalOperator(Vec{2.0, -1.0}));
  CHECK(d(0, 0) == 2.0);
  CHECK(d(1, 1) == -1.0);
  CHECK(d(0, 1) == 0.0);
  CHECK(d(1, 0) == 0.0);
}
