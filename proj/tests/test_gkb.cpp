#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "gkreg/gkb.hpp"
#include "gkreg/problems.hpp"
#include "gkreg/svdcore.hpp"
#include "oracles.hpp"

using namespace gkreg;

namespace {

void check_invariants(const BidiagFactorization& f, const Matrix& A, const Vector& b) {
  const Index t = f.t();
  const Matrix B = f.bidiag_matrix(t);
  const double norm_est = f.operator_norm_estimate();
  CHECK((A * f.G() - f.H() * B).norm() <= 1e-10 * norm_est);
  CHECK((f.G().transpose() * f.G() - Matrix::Identity(t, t)).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((f.H().transpose() * f.H() - Matrix::Identity(t + 1, t + 1)).lpNorm<Eigen::Infinity>() <=
        1e-10);
  CHECK((f.beta1() * f.H().col(0) - b).norm() <= 1e-12 * b.norm());
  for (Index j = 0; j < t; ++j) {
    CHECK(f.theta()[j] > 0);
    CHECK(f.betasub()[j] >= 0);
  }
}

}  // namespace

TEST_CASE("initialization") {
  auto op = identity_operator(2);
  Vector b(2);
  b << 3, 4;
  auto f = gkb_init(*op, b, 2);
  CHECK(f.beta1() == doctest::Approx(5.0));
  CHECK(f.H().col(0)[0] == doctest::Approx(0.6));
  CHECK(f.H().col(0)[1] == doctest::Approx(0.8));
  CHECK(f.t() == 0);

  Vector e1 = Vector::Unit(4, 0);
  auto f2 = gkb_init(*identity_operator(4), e1, 3);
  CHECK((f2.H().col(0) - e1).norm() == 0);
  CHECK(f2.H().col(0).norm() == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(gkb_init(*op, Vector::Zero(2), 2), std::invalid_argument);
  CHECK_THROWS_AS(gkb_init(*op, b, 5), std::invalid_argument);  // t_max > min(m, n)
}

TEST_CASE("identity operator exhausts the Krylov space in one step") {
  const Index n = 5;
  auto op = identity_operator(n);
  const Vector b = oracle::random_vector(n, 3).normalized();
  auto f = gkb_run(*op, b, n);
  CHECK(f.t() == 1);
  CHECK(f.exact_termination());
  CHECK(f.theta()[0] == doctest::Approx(1.0));
  CHECK(f.betasub()[0] <= 1e-14);
  // the completed H column keeps the orthonormality invariant intact
  CHECK((f.H().transpose() * f.H() - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("coefficients follow the three-term recurrence") {
  Matrix A = Vector::Zero(2).asDiagonal();
  A(0, 0) = 2;
  A(1, 1) = 1;
  Vector b = Vector::Constant(2, 1.0 / std::sqrt(2.0));
  auto f = gkb_run(*dense_operator(A), b, 2);
  CHECK(f.theta()[0] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-14));

  const auto ref = oracle::plain_bidiag(A, b, 2);
  for (std::size_t j = 0; j < ref.theta.size(); ++j) {
    CHECK(f.theta()[Index(j)] == doctest::Approx(ref.theta[j]).epsilon(1e-12));
    // breakdown-level betas are roundoff noise in both computations
    if (ref.beta[j] > 1e-12)
      CHECK(f.betasub()[Index(j)] == doctest::Approx(ref.beta[j]).epsilon(1e-10));
  }
}

TEST_CASE("factorization invariants on a random operator") {
  const Matrix A = oracle::random_matrix(20, 15, 7);
  const Vector b = oracle::random_vector(20, 8);
  auto f = gkb_run(*dense_operator(A), b, 10);
  CHECK(f.t() == 10);
  check_invariants(f, A, b);
}

TEST_CASE("residual norm identity") {
  const Matrix A = oracle::random_matrix(18, 12, 9);
  const Vector b = oracle::random_vector(18, 10);
  auto f = gkb_run(*dense_operator(A), b, 8);
  const Matrix B = f.bidiag_matrix(f.t());
  const Vector rhs = projected_rhs(f);
  CHECK(rhs[0] == doctest::Approx(b.norm()));
  CHECK(rhs.norm() == doctest::Approx(b.norm()));
  for (int k = 0; k < 20; ++k) {
    const Vector w = oracle::random_vector(f.t(), 100 + std::uint64_t(k));
    const double proj = (B * w - rhs).norm();
    const double full = (A * (f.G() * w) - b).norm();
    CHECK(proj == doctest::Approx(full).epsilon(1e-10));
  }
}

TEST_CASE("projected rhs shape") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(9, 7, 11)), oracle::random_vector(9, 12), 2);
  const Vector rhs = projected_rhs(f);
  CHECK(rhs.size() == 3);
  CHECK(rhs[1] == 0);
  CHECK(rhs[2] == 0);
}

TEST_CASE("Ritz values increase with t and stay below the true spectrum") {
  const Matrix A = oracle::random_matrix(24, 16, 13);
  const Vector b = oracle::random_vector(24, 14);
  const Vector sigma = svd(A).gamma;
  auto f = gkb_init(*dense_operator(A), b, 12);
  Vector prev;
  while (f.t() < 12 && gkb_step(f, *dense_operator(A))) {
    const Vector g = svd(f.bidiag_matrix(f.t())).gamma;
    for (Index i = 0; i < prev.size(); ++i) CHECK(g[i] >= prev[i] * (1 - 1e-12));
    for (Index i = 0; i < g.size(); ++i) CHECK(g[i] <= sigma[i] * (1 + 1e-8));
    prev = g;
  }
}

// the reason for full reorthogonalization: orthogonality holds far beyond
// the point where the plain recurrence would have lost it
TEST_CASE("orthogonality residuals stay at roundoff out to t = 250 on a 2D problem") {
  const ProblemInstance pi = blur2d(32, 2.0, 6);
  const auto samples = add_noise(pi, 0.01, 5, 1);
  auto f = gkb_run(*pi.op, samples[0].b, 250);
  REQUIRE(f.t() == 250);
  CHECK((f.G().transpose() * f.G() - Matrix::Identity(250, 250)).lpNorm<Eigen::Infinity>() <=
        1e-10);
  CHECK((f.H().transpose() * f.H() - Matrix::Identity(251, 251)).lpNorm<Eigen::Infinity>() <=
        1e-10);
}

TEST_CASE("binary dump layout") {
  auto f = gkb_run(*dense_operator(oracle::random_matrix(6, 5, 15)), oracle::random_vector(6, 16), 3);
  std::ostringstream os(std::ios::binary);
  dump_gkb(f, os);
  const std::string s = os.str();
  REQUIRE(s.size() == 4 + 8 + 8 + 3 * 8 + 3 * 8 + 8);
  CHECK(s.substr(0, 4) == "GKB1");
  std::uint64_t t = 0;
  std::memcpy(&t, s.data() + 4, 8);
  CHECK(t == 3);
  double theta0 = 0, beta1 = 0;
  std::memcpy(&theta0, s.data() + 20, 8);
  CHECK(theta0 == f.theta()[0]);
  std::memcpy(&beta1, s.data() + s.size() - 8, 8);
  CHECK(beta1 == f.beta1());
}
