#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gkreg/gkb.hpp"
#include "gkreg/regparam.hpp"
#include "oracles.hpp"

using namespace gkreg;

namespace {

SpectralData scalar_data(double gamma, double b1, double b2, Index m_full) {
  SpectralData sd;
  sd.t = 1;
  sd.m_full = m_full;
  sd.gamma = Vector::Constant(1, gamma);
  sd.bhat.resize(2);
  sd.bhat << b1, b2;
  return sd;
}

// SpectralData of a dense matrix treated as its own projected problem: all
// out-of-range energy of b lands in the extra coefficient.
SpectralData dense_data(const Matrix& A, const Vector& b, Index m_full) {
  const auto s = svd(A);
  SpectralData sd;
  sd.t = s.p();
  sd.m_full = m_full;
  sd.gamma = s.gamma;
  sd.bhat.resize(sd.t + 1);
  sd.bhat.head(sd.t) = s.U.transpose() * b;
  sd.bhat[sd.t] = std::sqrt(std::max(0.0, b.squaredNorm() - sd.bhat.head(sd.t).squaredNorm()));
  return sd;
}

}  // namespace

TEST_CASE("zeta grid") {
  const Vector g = zeta_grid(1, 100, 3);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[2] == doctest::Approx(100.0));
  const Vector d = zeta_grid(0.01, 0.01 * std::pow(10.0, 4), 5);
  for (Index i = 0; i < 5; ++i)
    CHECK(d[i] == doctest::Approx(0.01 * std::pow(10.0, double(i))).epsilon(1e-12));
  CHECK_THROWS_AS(zeta_grid(0, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(zeta_grid(2, 1, 4), std::invalid_argument);
}

TEST_CASE("project_spectrum preserves the data norm") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(12, 9, 3)), oracle::random_vector(12, 4), 6);
  const auto sd = project_spectrum(svd(f.bidiag_matrix(6)), f.beta1(), 12);
  CHECK(sd.gamma.size() == 6);
  CHECK(sd.bhat.size() == 7);
  CHECK(sd.bhat.norm() == doctest::Approx(f.beta1()).epsilon(1e-12));
}

TEST_CASE("upre limits for the scalar problem") {
  const double c = 0.37;
  const auto sd = scalar_data(1.0, 1.0, c, 5);
  CHECK(upre(sd, 1e-9) == doctest::Approx(c * c).epsilon(1e-6));
  CHECK(upre(sd, 1e9) == doctest::Approx(1.0 + c * c - 2.0).epsilon(1e-6));
}

TEST_CASE("upre matches direct evaluation via the dense influence matrix") {
  const Matrix A = oracle::random_matrix(8, 6, 5);
  const Vector b = oracle::random_vector(8, 6);
  const auto sd = dense_data(A, b, 8);
  for (double zeta : {0.05, 0.3, 1.0, 4.0}) {
    const Matrix infl = oracle::influence_matrix(A, zeta);
    const double direct =
        ((infl - Matrix::Identity(8, 8)) * b).squaredNorm() + 2.0 * infl.trace() - 8.0;
    CHECK(upre(sd, zeta, UpreMode::Full) == doctest::Approx(direct).epsilon(1e-8));
  }
}

TEST_CASE("upre modes differ by a constant and share the argmin") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(20, 14, 7)), oracle::random_vector(20, 8), 8);
  const auto sd = project_spectrum(svd(f.bidiag_matrix(8)), f.beta1(), 20);
  const Vector grid = zeta_grid(1e-4, 10, 200);
  Index arg_p = 0, arg_f = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double diff = upre(sd, grid[i], UpreMode::Full) - upre(sd, grid[i], UpreMode::Projected);
    CHECK(diff == doctest::Approx(double(sd.t + 1) - 20.0).epsilon(1e-12));
    if (upre(sd, grid[i], UpreMode::Projected) < upre(sd, grid[arg_p], UpreMode::Projected))
      arg_p = i;
    if (upre(sd, grid[i], UpreMode::Full) < upre(sd, grid[arg_f], UpreMode::Full)) arg_f = i;
  }
  CHECK(arg_p == arg_f);
}

TEST_CASE("weighted gcv") {
  // scalar arithmetic case at omega = 1, zeta = gamma = 1: numerator
  // (1/2)^2, denominator ((1 + t - t) + 1/2)^2 = 9/4
  const auto sd = scalar_data(1.0, 1.0, 0.0, 4);
  CHECK(gcv_w(sd, 1.0, 1.0) == doctest::Approx(1.0 / 9.0));
  CHECK_THROWS_AS(gcv_w(sd, 1.0, 1.5), std::invalid_argument);

  // omega = 1 reduces to the projected GCV of the (t+1) x t block
  const Matrix B = oracle::random_matrix(7, 6, 9);  // stands in for a projected block
  const Vector rhs = oracle::random_vector(7, 10);
  const auto sdb = dense_data(B, rhs, 30);
  for (double zeta : {0.1, 0.9, 3.0}) {
    const Matrix infl = oracle::influence_matrix(B, zeta);
    const double num = ((infl - Matrix::Identity(7, 7)) * rhs).squaredNorm();
    const double den = (infl - Matrix::Identity(7, 7)).trace();
    CHECK(gcv_w(sdb, zeta, 1.0) == doctest::Approx(num / (den * den)).epsilon(1e-8));
    // the weighted denominator, assembled densely as tr(I - omega B(zeta))
    const double omega = double(sdb.t + 1) / double(sdb.m_full);
    const double dden = (Matrix::Identity(7, 7) - omega * infl).trace();
    CHECK(gcv_w(sdb, zeta, omega) == doctest::Approx(num / (dden * dden)).epsilon(1e-8));
  }
}

TEST_CASE("mdp residual bounds and the direct-residual oracle") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(15, 11, 11)), oracle::random_vector(15, 12), 7);
  const auto sb = svd(f.bidiag_matrix(7));
  const auto sd = project_spectrum(sb, f.beta1(), 15);
  CHECK(mdp_residual(sd, 0.0) == doctest::Approx(sd.bhat[7] * sd.bhat[7]).epsilon(1e-10));
  CHECK(mdp_residual(sd, 1e12) == doctest::Approx(f.beta1() * f.beta1()).epsilon(1e-6));

  const Vector rhs = projected_rhs(f);
  const Matrix B = f.bidiag_matrix(7);
  double prev = 0;
  for (double zeta : {0.01, 0.1, 0.5, 2.0, 8.0}) {
    const Vector w = tikhonov_solve(sb, rhs, zeta).x;
    const double direct = (B * w - rhs).squaredNorm();
    CHECK(mdp_residual(sd, zeta) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(mdp_residual(sd, zeta) >= prev);
    prev = mdp_residual(sd, zeta);
  }
}

TEST_CASE("mdp root finding") {
  // scalar closed form: zeta^2 = s/(1-s) with s = sqrt((delta - b2^2)/b1^2)
  const double b1 = 2.0, b2 = 0.5;
  const auto sd = scalar_data(1.0, b1, b2, 5);
  const double delta = 1.7;
  const double s = std::sqrt((delta - b2 * b2) / (b1 * b1));
  const double zeta_ref = std::sqrt(s / (1.0 - s));
  const auto root = mdp_solve(sd, delta, {1e-6, 1e6});
  CHECK(root.flag == MdpRoot::Ok);
  CHECK(root.zeta == doctest::Approx(zeta_ref).epsilon(1e-10));
  CHECK(mdp_residual(sd, root.zeta) == doctest::Approx(delta).epsilon(1e-8));

  // monotonicity flags
  CHECK(mdp_solve(sd, 0.1, {1e-6, 1e6}).flag == MdpRoot::NoRootAbove);   // delta < b2^2
  CHECK(mdp_solve(sd, 10.0, {1e-6, 1e6}).flag == MdpRoot::NoRootBelow);  // delta > beta1^2
}

TEST_CASE("select_parameter refinement and tie handling") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(25, 18, 13)), oracle::random_vector(25, 14), 9);
  const auto sd = project_spectrum(svd(f.bidiag_matrix(9)), f.beta1(), 25);

  SUBCASE("refinement improves on a coarse grid") {
    const Vector coarse = zeta_grid(sd.gamma[8], sd.gamma[0], 3);
    const auto sel = select_parameter(Method::Upre, sd, coarse);
    double grid_best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < 3; ++i) grid_best = std::min(grid_best, sel.values[i]);
    CHECK(upre(sd, sel.zeta_opt) <= grid_best + 1e-12 * std::abs(grid_best));
    CHECK(sel.zeta_opt >= coarse[0]);
    CHECK(sel.zeta_opt <= coarse[2]);
  }

  SUBCASE("selected zeta agrees with a 10x finer grid argmin") {
    const Vector grid = zeta_grid(std::max(1e-14 * sd.gamma[0], sd.gamma[8]), sd.gamma[0], 100);
    const auto sel = select_parameter(Method::Upre, sd, grid);
    const Vector fine = zeta_grid(grid[0], grid[99], 1000);
    Index arg = 0;
    for (Index i = 0; i < fine.size(); ++i)
      if (upre(sd, fine[i]) < upre(sd, fine[arg])) arg = i;
    // within one fine-grid cell
    const double cell = std::log(fine[1]) - std::log(fine[0]);
    CHECK(std::abs(std::log(sel.zeta_opt) - std::log(fine[arg])) <= 1.5 * cell);
  }

  SUBCASE("objectives are invariant to spectral sign flips") {
    SpectralData flipped = sd;
    for (Index i = 0; i < flipped.t; i += 2) flipped.bhat[i] = -flipped.bhat[i];
    for (double zeta : {0.2, 1.0}) {
      CHECK(upre(flipped, zeta) == upre(sd, zeta));
      CHECK(gcv_w(flipped, zeta, 0.5) == gcv_w(sd, zeta, 0.5));
      CHECK(mdp_residual(flipped, zeta) == mdp_residual(sd, zeta));
    }
  }

  SUBCASE("MIN requires an error closure") {
    const Vector grid = zeta_grid(0.1, 1.0, 5);
    CHECK_THROWS_AS(select_parameter(Method::Min, sd, grid), std::invalid_argument);
  }

  SUBCASE("grid ties break toward larger zeta") {
    SelectOptions opts;
    opts.re_eval = [](const VectorRef& zs) { return Vector::Ones(zs.size()); };
    const auto sel = select_parameter(Method::Min, sd, zeta_grid(0.1, 1.0, 7), opts);
    CHECK(sel.zeta_opt == doctest::Approx(1.0));
  }
}

TEST_CASE("min_oracle picks the smallest-error grid point") {
  const Matrix A = oracle::random_matrix(10, 8, 15);
  const Vector x_ex = oracle::random_vector(8, 16);
  const Vector b = A * x_ex;  // consistent, noise free
  const auto s = svd(A);
  const Vector grid = zeta_grid(1e-6, 1.0, 40);
  auto back = [](const Vector& w) { return w; };
  // with exact data the error grows with zeta, so the smallest point wins
  const double z = min_oracle(s, b, back, x_ex, grid);
  CHECK(z == doctest::Approx(grid[0]));
}
