#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gkreg/operators.hpp"
#include "gkreg/problems.hpp"
#include "oracles.hpp"

using namespace gkreg;

TEST_CASE("identity and dense apply") {
  auto id = identity_operator(3);
  Vector v(3);
  v << 1, 2, 3;
  CHECK(id->apply(v) == v);
  CHECK(id->apply_transpose(v) == v);

  Matrix A(3, 2);
  A << 2, 0, 0, 3, 0, 0;
  auto op = dense_operator(A);
  Vector x(2);
  x << 1, 1;
  Vector y = op->apply(x);
  CHECK(y[0] == 2);
  CHECK(y[1] == 3);
  CHECK(y[2] == 0);
  Vector u(3);
  u << 1, 1, 5;
  Vector z = op->apply_transpose(u);
  CHECK(z[0] == 2);
  CHECK(z[1] == 3);
}

TEST_CASE("argument validation") {
  auto op = dense_operator(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(op->apply(Vector::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(op->apply_transpose(Vector::Zero(2)), std::invalid_argument);
  Vector bad = Vector::Zero(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(op->apply(bad), std::invalid_argument);
}

TEST_CASE("adjoint consistency across operator kinds") {
  std::vector<OperatorPtr> ops;
  ops.push_back(dense_operator(oracle::random_matrix(13, 9, 1)));
  ops.push_back(identity_operator(7));
  ops.push_back(column_scaled(dense_operator(oracle::random_matrix(8, 6, 2)),
                              {oracle::random_vector(6, 3).cwiseAbs()}));
  ColumnMask mask = ColumnMask::all(6);
  mask.active[2] = 0;
  ops.push_back(column_subset(dense_operator(oracle::random_matrix(8, 6, 4)), mask));
  ops.push_back(blur_operator(12, 1.3, 4));
  ops.push_back(tomo_operator(16, 7, 20));
  DiagonalWeights cov{oracle::random_vector(8, 5).cwiseAbs() + Vector::Constant(8, 0.5)};
  ops.push_back(whiten(dense_operator(oracle::random_matrix(8, 6, 6)), Vector::Zero(8), cov).first);

  for (const auto& op : ops) CHECK(oracle::adjoint_mismatch(*op, 100) <= 1e-12);
}

TEST_CASE("whiten") {
  Matrix A = oracle::random_matrix(4, 3, 7);
  Vector b = oracle::random_vector(4, 8);

  SUBCASE("unit covariance leaves everything unchanged") {
    auto [opw, bw] = whiten(dense_operator(A), b, DiagonalWeights::ones(4));
    CHECK((bw - b).norm() == 0);
    CHECK((to_dense(*opw) - A).norm() == 0);
    // idempotent under unit covariance
    auto [opw2, bw2] = whiten(opw, bw, DiagonalWeights::ones(4));
    CHECK((bw2 - bw).norm() == 0);
    CHECK((to_dense(*opw2) - A).norm() == 0);
  }

  SUBCASE("constant covariance scales by 1/s") {
    auto [opw, bw] = whiten(dense_operator(A), Vector::Constant(4, 2.0),
                            DiagonalWeights{Vector::Constant(4, 4.0)});
    CHECK(bw.isApprox(Vector::Constant(4, 1.0)));
    CHECK(to_dense(*opw).isApprox(A / 2.0));
  }

  SUBCASE("nonpositive covariance rejected") {
    DiagonalWeights cov{Vector::Constant(4, 1.0)};
    cov.values[2] = 0.0;
    CHECK_THROWS_AS(whiten(dense_operator(A), b, cov), std::invalid_argument);
  }
}

// Monte-Carlo over 50 seeds: with s_i = eta ||b_ex||, the whitened residual
// b~ - b~_ex should have sample variance 1 per component.
TEST_CASE("whitened noise has unit variance") {
  const ProblemInstance pi = phillips(152, 304);
  const double eta = 0.005;
  const DiagonalWeights cov = white_covariance(pi, eta);
  const auto samples = add_noise(pi, eta, 99, 50);
  for (int k = 0; k < 50; k += 7) {
    auto [opw, bw] = whiten(pi.op, samples[std::size_t(k)].b, cov);
    auto [opw2, bex_w] = whiten(pi.op, pi.b_ex, cov);
    const double var = (bw - bex_w).squaredNorm() / 152.0;
    CHECK(var == doctest::Approx(1.0).epsilon(0.2));
  }
}

TEST_CASE("column_scaled") {
  Matrix A(1, 2);
  A << 1, 2;
  Vector d(2);
  d << 3, 4;
  auto op = column_scaled(dense_operator(A), {d});
  Matrix D = to_dense(*op);
  CHECK(D(0, 0) == 3);
  CHECK(D(0, 1) == 8);

  auto same = column_scaled(dense_operator(A), DiagonalWeights::ones(2));
  CHECK((to_dense(*same) - A).norm() == 0);

  // reweighting-step operator equals the dense assembly A * diag(|delta|)
  Matrix B = oracle::random_matrix(6, 8, 11);
  Vector delta = oracle::random_vector(8, 12);
  auto scaled = column_scaled(dense_operator(B), {delta.cwiseAbs()});
  Matrix expect = B * delta.cwiseAbs().asDiagonal();
  CHECK((to_dense(*scaled) - expect).norm() == 0);
}

TEST_CASE("column_subset") {
  Matrix A(1, 3);
  A << 1, 2, 3;
  ColumnMask keep13{{1, 0, 1}};
  Matrix S = to_dense(*column_subset(dense_operator(A), keep13));
  CHECK(S.cols() == 2);
  CHECK(S(0, 0) == 1);
  CHECK(S(0, 1) == 3);

  auto same = column_subset(dense_operator(A), ColumnMask::all(3));
  CHECK((to_dense(*same) - A).norm() == 0);

  CHECK_THROWS_AS(column_subset(dense_operator(A), ColumnMask{{0, 0, 0}}),
                  std::invalid_argument);

  // composition against the dense oracle: scale columns, then delete
  Matrix B = oracle::random_matrix(6, 8, 13);
  Vector d = oracle::random_vector(8, 14).cwiseAbs();
  ColumnMask mask = ColumnMask::all(8);
  mask.active[1] = 0;
  mask.active[5] = 0;
  auto op = column_subset(column_scaled(dense_operator(B), {d}), mask);
  Matrix scaled = B * d.asDiagonal();
  Matrix expect(6, 6);
  Index jj = 0;
  for (Index j = 0; j < 8; ++j)
    if (mask.active[std::size_t(j)]) expect.col(jj++) = scaled.col(j);
  CHECK((to_dense(*op) - expect).norm() == 0);
}

TEST_CASE("gather and scatter are inverse on the active set") {
  ColumnMask mask{{1, 0, 1, 1, 0}};
  Vector full(5);
  full << 1, 2, 3, 4, 5;
  Vector c = gather_active(mask, full);
  CHECK(c.size() == 3);
  CHECK(c[0] == 1);
  CHECK(c[1] == 3);
  CHECK(c[2] == 4);
  Vector back = scatter_active(mask, c);
  CHECK(back[0] == 1);
  CHECK(back[1] == 0);
  CHECK(back[4] == 0);
}

TEST_CASE("to_dense") {
  CHECK((to_dense(*identity_operator(3)) - Matrix::Identity(3, 3)).norm() == 0);
  auto big = dense_operator(Matrix::Zero(100, 100));
  CHECK_THROWS_AS(to_dense(*big, 50), std::invalid_argument);
}

TEST_CASE("norm_estimate approaches the top singular value") {
  Matrix A = oracle::random_matrix(20, 15, 21);
  const double sigma1 = A.jacobiSvd().singularValues()[0];
  CHECK(norm_estimate(*dense_operator(A), 60) == doctest::Approx(sigma1).epsilon(1e-6));
  // the default 10 iterations are only used for tolerance scaling
  CHECK(norm_estimate(*dense_operator(A)) == doctest::Approx(sigma1).epsilon(0.1));
}

TEST_CASE("blur operator matches a direct convolution loop") {
  const Index N = 10;
  const double sigma = 1.2;
  const Index hw = 3;
  auto op = blur_operator(N, sigma, hw);

  Vector k(2 * hw + 1);
  for (Index p = -hw; p <= hw; ++p) k[p + hw] = std::exp(-0.5 * p * p / (sigma * sigma));
  k /= k.sum();

  auto direct = [&](const Vector& x) {
    Vector y = Vector::Zero(N * N);
    for (Index r = 0; r < N; ++r)
      for (Index c = 0; c < N; ++c) {
        double s = 0;
        for (Index p = -hw; p <= hw; ++p)
          for (Index q = -hw; q <= hw; ++q) {
            const Index rr = r - p, cc = c - q;
            if (rr >= 0 && rr < N && cc >= 0 && cc < N)
              s += k[p + hw] * k[q + hw] * x[rr * N + cc];
          }
        y[r * N + c] = s;
      }
    return y;
  };

  // delta image: the response is the separable stencil centered at the delta
  Vector delta = Vector::Zero(N * N);
  delta[5 * N + 4] = 1.0;
  CHECK((op->apply(delta) - direct(delta)).lpNorm<Eigen::Infinity>() <= 1e-15);
  for (Index p = -hw; p <= hw; ++p)
    for (Index q = -hw; q <= hw; ++q)
      CHECK(op->apply(delta)[(5 + p) * N + (4 + q)] ==
            doctest::Approx(k[p + hw] * k[q + hw]).epsilon(1e-14));

  const Vector x = oracle::random_vector(N * N, 31);
  CHECK((op->apply(x) - direct(x)).lpNorm<Eigen::Infinity>() <= 1e-14);
}
