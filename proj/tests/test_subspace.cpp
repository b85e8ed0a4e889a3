#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gkreg/subspace.hpp"
#include "oracles.hpp"

using namespace gkreg;

namespace {

// assemble a RhoSequence directly from coefficient arrays
RhoSequence make_rho(const std::vector<double>& rho_vals, Index t_min) {
  RhoSequence rs;
  rs.t_min = t_min;
  rs.logrho.resize(Index(rho_vals.size()));
  for (std::size_t i = 0; i < rho_vals.size(); ++i) rs.logrho[Index(i)] = std::log(rho_vals[i]);
  return rs;
}

}  // namespace

TEST_CASE("rho accumulates theta/beta ratios") {
  Matrix A = oracle::random_matrix(8, 6, 1);
  auto f = gkb_run(*dense_operator(A), oracle::random_vector(8, 2), 4);
  const RhoSequence rs = rho(f, 1);
  double acc = 0;
  for (Index j = 0; j < f.t(); ++j) {
    acc += std::log(f.theta()[j]) - std::log(f.betasub()[j]);
    CHECK(rs.logrho[j] == doctest::Approx(acc).epsilon(1e-14));
  }
}

TEST_CASE("log-domain rho equals the direct product") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> dist(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> th(12), be(12);
    double direct = 1;
    std::vector<double> products;
    for (int j = 0; j < 12; ++j) {
      th[j] = dist(eng);
      be[j] = dist(eng);
      direct *= th[j] / be[j];
      products.push_back(direct);
    }
    // via the same cumulative-log formula the library uses
    double acc = 0;
    for (int j = 0; j < 12; ++j) {
      acc += std::log(th[j]) - std::log(be[j]);
      CHECK(std::exp(acc) == doctest::Approx(products[std::size_t(j)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact breakdown marks rho infinite") {
  auto f = gkb_run(*identity_operator(4), oracle::random_vector(4, 5), 3);
  const RhoSequence rs = rho(f, 1);
  CHECK(rs.exact_breakdown);
  CHECK(std::isinf(rs.logrho[rs.t_achieved() - 1]));
}

TEST_CASE("t_opt_rho picks the earliest peak past t_min") {
  CHECK(t_opt_rho(make_rho({1, 5, 3, 2}, 1)).t == 4);
  // equal maxima: earliest taken
  CHECK(t_opt_rho(make_rho({1, 5, 5, 2}, 1)).t == 4);
  // clamped to the achieved range
  CHECK(t_opt_rho(make_rho({1, 2, 5}, 1)).t == 3);
  // flat sequence flagged
  auto flat = t_opt_rho(make_rho({2, 2, 2, 2, 2, 2}, 1));
  CHECK(flat.degenerate);
  CHECK(flat.t == 3);
  // rho still rising at the end: flagged, last index used
  auto rising = t_opt_rho(make_rho({1, 2, 3, 4, 5, 6}, 1));
  CHECK(rising.t == 6);
  CHECK(rising.degenerate);
}

TEST_CASE("t_opt_min takes the global argmin past t_min") {
  CHECK(t_opt_min(make_rho({4, 1, 2, 3}, 0)).t == 4);
  CHECK(t_opt_min(make_rho({1, 2, 3, 4, 5}, 0)).t == 3);  // monotone: first index + 2
  CHECK(t_opt_min(make_rho({9, 8, 7, 1, 7, 9, 9}, 2)).t == 6);
}

TEST_CASE("subspace picks respect the bounds") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> vals(20);
    for (auto& v : vals) v = dist(eng);
    const Index t_min = 3;
    for (auto pick : {t_opt_rho(make_rho(vals, t_min)), t_opt_min(make_rho(vals, t_min))}) {
      CHECK(pick.t <= 20);
      CHECK(pick.t >= t_min + 1);
    }
  }
}

TEST_CASE("gcv for the truncated expansion") {
  Vector e1 = Vector::Zero(8);
  e1[0] = 1;
  CHECK(gcv_tsvd(e1, 7).t_opt == 1);

  // constant coefficients: G(t) = t_max c^2 / (t_max - t), minimized at t = 1
  Vector c = Vector::Constant(9, 0.7);
  auto g = gcv_tsvd(c, 8);
  CHECK(g.t_opt == 1);
  for (Index t = 1; t < 8; ++t)
    CHECK(g.values[t - 1] == doctest::Approx(8.0 * 0.49 / double(8 - t)).epsilon(1e-12));

  // invariant to sign flips and to permutations of entries above the cut
  Vector b = oracle::random_vector(10, 11);
  auto base = gcv_tsvd(b, 9);
  Vector flipped = -b;
  auto f = gcv_tsvd(flipped, 9);
  CHECK((f.values - base.values).lpNorm<Eigen::Infinity>() <= 1e-15);
  Vector permuted = b;
  std::swap(permuted[5], permuted[7]);
  CHECK(gcv_tsvd(permuted, 9).values[4] == doctest::Approx(base.values[4]).epsilon(1e-15));
  CHECK_THROWS_AS(gcv_tsvd(b, 1), std::invalid_argument);
}

TEST_CASE("zeta window") {
  Vector g(2);
  g << 10, 1;
  const ZetaWindow w = zeta_window(g, 2, 0.1);
  CHECK(w.lo == doctest::Approx(0.1));
  CHECK(w.hi == doctest::Approx(10.0));
  CHECK_FALSE(w.widened);
  // filter factor at the window floor
  const double phi = 1.0 / (1.0 + 0.1 * 0.1);
  CHECK(g[1] * g[1] / (g[1] * g[1] + w.lo * w.lo) == doctest::Approx(phi));

  Vector gflat(2);
  gflat << 1, 1;
  const ZetaWindow wd = zeta_window(gflat, 1, 1.5);  // tau >= 1 collapses the window
  CHECK(wd.widened);
  CHECK(wd.lo < wd.hi);

  const auto [lo2d, hi2d] = min_zeta_range_2d();
  CHECK(lo2d == doctest::Approx(std::pow(10.0, -1.5)));
  CHECK(hi2d == doctest::Approx(1.0));
}
