#include "gkreg/subspace.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gkreg {

RhoSequence rho(const BidiagFactorization& fact, Index t_min) {
  if (fact.t() < 1) throw std::invalid_argument("rho: empty factorization");
  RhoSequence rs;
  rs.t_min = t_min;
  rs.logrho.resize(fact.t());
  double acc = 0;
  for (Index j = 0; j < fact.t(); ++j) {
    const double th = fact.theta()[j];
    const double be = fact.betasub()[j];
    if (be <= 0) {
      rs.exact_breakdown = true;
      acc = std::numeric_limits<double>::infinity();
    } else if (std::isfinite(acc)) {
      acc += std::log(th) - std::log(be);
    }
    rs.logrho[j] = acc;
  }
  return rs;
}

namespace {

bool is_flat(const RhoSequence& rs, Index from_t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index t = from_t; t <= rs.t_achieved(); ++t) {
    const double v = rs.logrho[t - 1];
    if (!std::isfinite(v)) return false;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
}

}  // namespace

SubspacePick t_opt_rho(const RhoSequence& rs) {
  const Index T = rs.t_achieved();
  const Index start = std::max<Index>(rs.t_min, 1);
  if (start > T) return {T, true};
  if (is_flat(rs, start)) return {std::min(rs.t_min + 2, T), true};
  for (Index t = start; t <= T; ++t) {
    const double cur = rs.logrho[t - 1];
    const double nxt = t < T ? rs.logrho[t] : -std::numeric_limits<double>::infinity();
    if (cur >= nxt) return {std::min(t + 2, T), t == T};
  }
  return {std::min(rs.t_min + 2, T), true};
}

SubspacePick t_opt_min(const RhoSequence& rs) {
  const Index T = rs.t_achieved();
  const Index start = std::max<Index>(rs.t_min + 1, 1);
  if (start > T) return {T, true};
  if (is_flat(rs, start)) return {std::min(rs.t_min + 2, T), true};
  Index best = start;
  for (Index t = start; t <= T; ++t)
    if (rs.logrho[t - 1] < rs.logrho[best - 1]) best = t;
  return {std::min(best + 2, T), false};
}

TsvdGcv gcv_tsvd(const VectorRef& bhat, Index t_max) {
  if (t_max < 2) throw std::invalid_argument("gcv_tsvd: t_max must be >= 2");
  if (bhat.size() < t_max) throw std::invalid_argument("gcv_tsvd: bhat too short");
  TsvdGcv out;
  out.values.resize(t_max - 1);
  // suffix sums of bhat_i^2 over i = t+1..t_max
  double tail = 0;
  Vector tails(t_max);
  for (Index i = t_max; i >= 1; --i) {
    tail += bhat[i - 1] * bhat[i - 1];
    tails[i - 1] = tail;
  }
  for (Index t = 1; t < t_max; ++t) {
    const double d = double(t_max - t);
    out.values[t - 1] = double(t_max) / (d * d) * tails[t];
  }
  out.t_opt = 1;
  for (Index t = 2; t < t_max; ++t)
    if (out.values[t - 1] < out.values[out.t_opt - 1]) out.t_opt = t;
  return out;
}

ZetaWindow zeta_window(const VectorRef& gamma, Index t_star, double tau) {
  if (t_star < 1 || t_star > gamma.size()) throw std::invalid_argument("zeta_window: bad t_star");
  ZetaWindow w;
  w.lo = tau * gamma[t_star - 1];
  w.hi = gamma[0];
  if (!(w.lo < w.hi) || !(w.lo > 0)) {
    w.lo = 1e-14 * gamma[0];
    w.hi = gamma[0];
    w.widened = true;
  }
  return w;
}

std::pair<double, double> min_zeta_range_2d(double mean_noise_std) {
  return {std::pow(10.0, -1.5) * mean_noise_std, 1.0 * mean_noise_std};
}

}  // namespace gkreg
