#pragma once

#include "gkreg/gkb.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

// Noise-revealing cumulative ratio rho(t) = prod_{j<=t} theta_j / beta_{j+1},
// kept in the log domain. Entries are +inf past exact breakdown (beta = 0).
struct RhoSequence {
  Vector logrho;  // logrho[i] is log rho(t = i+1)
  Index t_min = 3;
  bool exact_breakdown = false;

  Index t_achieved() const { return logrho.size(); }
};

RhoSequence rho(const BidiagFactorization& fact, Index t_min);

struct SubspacePick {
  Index t = 0;
  bool degenerate = false;
};

// Noise-entry rule: the earliest local maximum of rho over t >= t_min,
// advanced 2 steps and clamped to the achieved t. A rho that is still rising
// at the end of the range means the entry point was not located; that case
// is flagged and the last index is used.
SubspacePick t_opt_rho(const RhoSequence& rs);

// Global argmin of rho over t > t_min, advanced 2 steps, clamped.
SubspacePick t_opt_min(const RhoSequence& rs);

// GCV function for a truncated SVD solution built from the projected data
// coefficients: G(t) = t_max/(t_max-t)^2 * sum_{i>t}^{t_max} bhat_i^2 for
// t = 1..t_max-1, minimized at t_opt.
struct TsvdGcv {
  Vector values;  // values[i] is G(t = i+1)
  Index t_opt = 0;
};

TsvdGcv gcv_tsvd(const VectorRef& bhat, Index t_max);

// Regularization window (tau * gamma_{t*}, gamma_1); at the lower edge the
// t*-th filter factor equals 1/(1+tau^2). A degenerate window is widened to
// (1e-14 gamma_1, gamma_1) and flagged.
struct ZetaWindow {
  double lo = 0;
  double hi = 0;
  bool widened = false;
};

ZetaWindow zeta_window(const VectorRef& gamma, Index t_star, double tau);

// Search range used for the minimum-error reference on 2D problems,
// 10^-1.5 .. 1 scaled by the mean noise standard deviation of the
// (whitened) data.
std::pair<double, double> min_zeta_range_2d(double mean_noise_std = 1.0);

}  // namespace gkreg
