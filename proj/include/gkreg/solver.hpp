#pragma once

#include <optional>
#include <vector>

#include "gkreg/gkb.hpp"
#include "gkreg/operators.hpp"
#include "gkreg/regparam.hpp"
#include "gkreg/subspace.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

enum class TRule { Rho, Min, GcvTsvd, Fixed };
enum class ZetaRule { Spectrum, Window, Range };
enum class WindowTStar { MaxRhoG, Rho };

struct HybridOptions {
  Index t_min = 3;
  Index t_max = 50;
  Index t_fixed = 0;  // used by TRule::Fixed
  Method method = Method::Upre;
  TRule t_rule = TRule::Rho;

  // zeta search range: the full captured spectrum
  // (max(1e-14 gamma_1, gamma_t) .. gamma_1), the tau-window anchored at
  // t* (partial-regularization regime), or an explicit range.
  ZetaRule zeta_rule = ZetaRule::Spectrum;
  WindowTStar window_t_star = WindowTStar::MaxRhoG;
  double tau = 0.1;
  double zeta_lo = 0;
  double zeta_hi = 0;

  double upsilon = 1.05;
  double omega = -1;  // < 0: (t+1)/m
  Index grid_count = 1000;
  double gkb_tol = 1e-16;
  UpreMode upre_mode = UpreMode::Projected;
};

struct HybridSolution {
  Index t_used = 0;
  double zeta = 0;
  Vector w;  // projected coefficients
  Vector x;  // full-space solution
  double residual_proj = 0;
  double residual_full = 0;
  RegSelection selection;
  RhoSequence rho_trace;
  Index t_opt_rho = 0;
  Index t_opt_min = 0;
  Index t_opt_g = 0;
  Vector gamma;  // spectrum of the solved projected block
  double beta1 = 0;
  std::string flag;
};

// One hybrid solve: whiten, shift by the prior, bidiagonalize the
// column-scaled and column-masked operator, pick t, regularize the projected
// problem, and scatter the update back to full coordinates. x_ex enables the
// minimum-error method on synthetic data.
HybridSolution hybrid_solve(OperatorPtr opA, const VectorRef& b, const DiagonalWeights& cov,
                            const VectorRef& x_apr, const DiagonalWeights& scale,
                            const ColumnMask& mask, const HybridOptions& opts,
                            const Vector* x_ex = nullptr);

struct IrrWeights {
  DiagonalWeights scale;  // |x_k - x_km1| componentwise (beta_focus = 0)
  ColumnMask mask;        // frozen where the step was (relatively) zero
  bool all_frozen = false;
};

// Reweighting from successive iterates; with focus beta > 0 the scale is
// sqrt(step^2 + beta^2) and nothing freezes.
IrrWeights irr_weights(const VectorRef& x_k, const VectorRef& x_km1, double rel_tol = 0.0,
                       double beta_focus = 0.0);

Vector positivity_clamp(Vector x);

struct IrrIteration {
  int k = 0;
  Vector x;
  ColumnMask mask;
  Index t_used = 0;
  double zeta = 0;
  double re = -1;  // relative error when x_ex is known, else -1
  RhoSequence rho_trace;
  std::string flag;
};

struct IrrHistory {
  std::vector<IrrIteration> iterations;
  bool converged_by_freeze = false;
};

// Outer iteratively-reweighted loop: k = 0 solves with identity weights from
// the zero vector; each later step scales columns by the previous update
// magnitudes, freezes the unchanged coordinates, shrinks the t range
// (t_min -> max(2, t_min-2), t_max -> previous t_used), and anchors the zeta
// window at t_opt-rho. The optional positivity clamp is applied to each
// iterate before the next weights are formed.
IrrHistory irr_iterate(OperatorPtr opA, const VectorRef& b, const DiagonalWeights& cov,
                       HybridOptions opts, int k_max, bool positivity,
                       const Vector* x_ex = nullptr);

}  // namespace gkreg
