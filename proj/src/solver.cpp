#include "gkreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gkreg {

namespace {

std::pair<double, double> grid_bounds(const HybridOptions& opts, const Vector& gamma, Index t_used,
                                      Index t_rho, Index t_g, bool* widened) {
  // The minimum-error reference on windowed (2D) problems searches the fixed
  // noise-scaled range instead of the tau-window.
  if (opts.method == Method::Min && opts.zeta_rule == ZetaRule::Window)
    return min_zeta_range_2d();
  switch (opts.zeta_rule) {
    case ZetaRule::Spectrum: {
      const double hi = gamma[0];
      const double lo = std::max(1e-14 * gamma[0], gamma[t_used - 1]);
      if (!(lo < hi)) return {1e-14 * hi, hi};
      return {lo, hi};
    }
    case ZetaRule::Window: {
      Index t_star = opts.window_t_star == WindowTStar::Rho ? t_rho : std::max(t_rho, t_g);
      t_star = std::clamp<Index>(t_star, 1, t_used);
      const ZetaWindow w = zeta_window(gamma, t_star, opts.tau);
      if (widened && w.widened) *widened = true;
      return {w.lo, w.hi};
    }
    case ZetaRule::Range:
      if (!(opts.zeta_lo > 0 && opts.zeta_hi > opts.zeta_lo))
        throw std::invalid_argument("hybrid_solve: bad explicit zeta range");
      return {opts.zeta_lo, opts.zeta_hi};
  }
  throw std::logic_error("grid_bounds");
}

}  // namespace

HybridSolution hybrid_solve(OperatorPtr opA, const VectorRef& b, const DiagonalWeights& cov,
                            const VectorRef& x_apr, const DiagonalWeights& scale,
                            const ColumnMask& mask, const HybridOptions& opts,
                            const Vector* x_ex) {
  const Index m = opA->rows(), n = opA->cols();
  if (b.size() != m || x_apr.size() != n || scale.size() != n || mask.size() != n)
    throw std::invalid_argument("hybrid_solve: inconsistent dimensions");
  if (!(opts.t_min >= 1 && opts.t_max > opts.t_min))
    throw std::invalid_argument("hybrid_solve: need 1 <= t_min < t_max");

  auto [opW, bw] = whiten(opA, b, cov);
  const Vector r = bw - opW->apply(x_apr);
  OperatorPtr opHat = column_subset(column_scaled(opW, scale), mask);

  HybridSolution sol;
  const Index t_cap = std::min<Index>(opts.t_max, std::min(opHat->rows(), opHat->cols()));
  BidiagFactorization fact = gkb_run(*opHat, r, t_cap, opts.gkb_tol);
  if (fact.t() < 1) throw std::runtime_error("hybrid_solve: immediate breakdown");
  sol.beta1 = fact.beta1();
  if (fact.exact_termination()) sol.flag = "breakdown";
  if (fact.t() < opts.t_min) sol.flag = "breakdown_before_t_min";

  sol.rho_trace = rho(fact, opts.t_min);
  sol.t_opt_rho = t_opt_rho(sol.rho_trace).t;
  sol.t_opt_min = t_opt_min(sol.rho_trace).t;

  // TSVD-GCV size rule, from the spectrum of the largest computed block
  const SvdTriplet svd_full = svd(fact.bidiag_matrix(fact.t()));
  const SpectralData sd_full = project_spectrum(svd_full, fact.beta1(), m);
  sol.t_opt_g = fact.t() >= 2 ? gcv_tsvd(sd_full.bhat, fact.t()).t_opt : 1;

  switch (opts.t_rule) {
    case TRule::Rho: sol.t_used = sol.t_opt_rho; break;
    case TRule::Min: sol.t_used = sol.t_opt_min; break;
    case TRule::GcvTsvd: sol.t_used = sol.t_opt_g; break;
    case TRule::Fixed:
      if (opts.t_fixed < 1) throw std::invalid_argument("hybrid_solve: t_fixed not set");
      sol.t_used = opts.t_fixed;
      break;
  }
  sol.t_used = std::clamp<Index>(sol.t_used, 1, fact.t());

  const SvdTriplet svd_b = sol.t_used == fact.t() ? svd_full : svd(fact.bidiag_matrix(sol.t_used));
  const SpectralData sd =
      sol.t_used == fact.t() ? sd_full : project_spectrum(svd_b, fact.beta1(), m);
  sol.gamma = sd.gamma;

  bool widened = false;
  const auto [glo, ghi] = grid_bounds(opts, sd.gamma, sol.t_used, sol.t_opt_rho, sol.t_opt_g,
                                      &widened);
  const Vector grid = zeta_grid(glo, ghi, opts.grid_count);
  if (widened) sol.flag = sol.flag.empty() ? "window_widened" : sol.flag;

  const Matrix G_t = fact.G().leftCols(sol.t_used);
  const Vector scale_active = gather_active(mask, scale.values);
  auto back_project = [&](const Vector& w) {
    Vector z = G_t * w;
    return Vector(x_apr + scatter_active(mask, scale_active.cwiseProduct(z)));
  };

  SelectOptions sopt;
  sopt.omega = opts.omega;
  sopt.upsilon = opts.upsilon;
  sopt.upre_mode = opts.upre_mode;
  if (opts.method == Method::Min) {
    if (!x_ex) throw std::invalid_argument("hybrid_solve: MIN requires the exact solution");
    const double nx = x_ex->norm();
    // one gemm over the whole grid instead of a solve per zeta
    sopt.re_eval = [&](const VectorRef& zs) {
      Matrix W(sd.t, zs.size());
      for (Index j = 0; j < zs.size(); ++j) {
        const Vector phi = filter_factors(sd.gamma, zs[j]);
        W.col(j) = svd_b.V * phi.cwiseProduct(sd.bhat.head(sd.t)).cwiseQuotient(sd.gamma);
      }
      Matrix Z = G_t * W;
      Vector res(zs.size());
      for (Index j = 0; j < zs.size(); ++j) {
        const Vector x = x_apr + scatter_active(mask, scale_active.cwiseProduct(Z.col(j)));
        res[j] = (x - *x_ex).norm() / nx;
      }
      return res;
    };
  }

  sol.selection = select_parameter(opts.method, sd, grid, sopt);
  sol.zeta = sol.selection.zeta_opt;
  if (sol.flag.empty()) sol.flag = sol.selection.flag;

  const Vector rhs = projected_rhs(fact).head(sol.t_used + 1);
  const FilteredSolution fs = tikhonov_solve(svd_b, rhs, sol.zeta);
  sol.w = fs.x;
  sol.x = back_project(sol.w);
  sol.residual_proj = (fact.bidiag_matrix(sol.t_used) * sol.w - rhs).norm();
  sol.residual_full = (opW->apply(sol.x) - bw).norm();
  return sol;
}

IrrWeights irr_weights(const VectorRef& x_k, const VectorRef& x_km1, double rel_tol,
                       double beta_focus) {
  if (x_k.size() != x_km1.size()) throw std::invalid_argument("irr_weights: length mismatch");
  IrrWeights w;
  Vector step = (x_k - x_km1).cwiseAbs();
  if (beta_focus > 0)
    w.scale.values = (step.array().square() + beta_focus * beta_focus).sqrt().matrix();
  else
    w.scale.values = step;
  const double cut = rel_tol * step.maxCoeff();
  w.mask.active.resize(static_cast<std::size_t>(step.size()));
  Index frozen = 0;
  for (Index i = 0; i < step.size(); ++i) {
    const bool freeze = beta_focus == 0 && step[i] <= cut;
    w.mask.active[static_cast<std::size_t>(i)] = freeze ? 0 : 1;
    frozen += freeze;
  }
  w.all_frozen = frozen == step.size();
  return w;
}

Vector positivity_clamp(Vector x) {
  return x.cwiseMax(0.0);
}

IrrHistory irr_iterate(OperatorPtr opA, const VectorRef& b, const DiagonalWeights& cov,
                       HybridOptions opts, int k_max, bool positivity, const Vector* x_ex) {
  if (k_max < 1) throw std::invalid_argument("irr_iterate: k_max must be >= 1");
  const Index n = opA->cols();
  IrrHistory hist;
  Vector x_prev2 = Vector::Zero(n);  // iterate before the previous one
  Vector x_prev = Vector::Zero(n);
  DiagonalWeights scale = DiagonalWeights::ones(n);
  ColumnMask mask = ColumnMask::all(n);

  for (int k = 0; k < k_max; ++k) {
    if (k >= 1) {
      IrrWeights w = irr_weights(x_prev, x_prev2, 0.0);
      if (w.all_frozen) {
        hist.converged_by_freeze = true;
        break;
      }
      scale = std::move(w.scale);
      mask = std::move(w.mask);
      opts.t_min = std::max<Index>(2, opts.t_min - 2);
      opts.t_max = std::max<Index>(hist.iterations.back().t_used, opts.t_min + 2);
      opts.window_t_star = WindowTStar::Rho;
    }
    HybridSolution sol = hybrid_solve(opA, b, cov, x_prev, scale, mask, opts, x_ex);
    Vector x = positivity ? positivity_clamp(sol.x) : sol.x;

    IrrIteration it;
    it.k = k;
    it.x = x;
    it.mask = mask;
    it.t_used = sol.t_used;
    it.zeta = sol.zeta;
    it.rho_trace = sol.rho_trace;
    it.flag = sol.flag;
    if (x_ex && x_ex->norm() > 0) it.re = (x - *x_ex).norm() / x_ex->norm();
    hist.iterations.push_back(std::move(it));

    x_prev2 = std::move(x_prev);
    x_prev = hist.iterations.back().x;
  }
  return hist;
}

}  // namespace gkreg
