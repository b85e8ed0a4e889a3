#pragma once

#include <functional>
#include <string>
#include <utility>

#include "gkreg/svdcore.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

enum class Method { Min, Mdp, Upre, Gcv, Wgcv, Pmdp };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Spectral quantities of a projected problem: singular values gamma of the
// (t+1) x t bidiagonal block and the rotated data coefficients
// bhat = U^T (beta_1 e_1), with bhat_{t+1} the component outside the range
// of the block. ||bhat|| = beta_1.
struct SpectralData {
  Vector gamma;  // length t
  Vector bhat;   // length t+1
  Index m_full = 0;
  Index t = 0;
};

// Builds SpectralData from the thin SVD of the bidiagonal block; the
// out-of-range coefficient is recovered from the norm identity.
SpectralData project_spectrum(const SvdTriplet& svd_b, double beta1, Index m_full);

// count points, log-equispaced from lo to hi inclusive.
Vector zeta_grid(double lo, double hi, Index count);

enum class UpreMode { Projected, Full };

// Unbiased predictive risk estimate. The two modes differ only by the
// additive degrees-of-freedom constant: t+1 (projected) or m (full).
double upre(const SpectralData& sd, double zeta, UpreMode mode = UpreMode::Projected);

// Weighted GCV; omega = 1 is the plain projected GCV, omega = (t+1)/m
// equilibrates the projected denominator with the full-problem one.
double gcv_w(const SpectralData& sd, double zeta, double omega);

// Squared residual of the regularized projected solution,
// nondecreasing in zeta; ranges from bhat_{t+1}^2 to beta_1^2.
double mdp_residual(const SpectralData& sd, double zeta);

struct MdpRoot {
  double zeta = 0;
  enum Flag { Ok, NoRootBelow, NoRootAbove } flag = Ok;
};

// Solves R(zeta) = delta by safeguarded Newton in log zeta within the
// bracket; |R - delta| <= 1e-8 delta when the root is bracketed. When even
// maximal smoothing undershoots delta the upper end is returned flagged
// (NoRootBelow); when the data are already over-smoothed at the lower end,
// the lower end is returned flagged (NoRootAbove).
MdpRoot mdp_solve(const SpectralData& sd, double delta, std::pair<double, double> bracket);

// Grid search for the parameter minimizing the true relative error; only
// available on synthetic problems. back maps projected coefficients w to the
// full-space solution.
double min_oracle(const SvdTriplet& svd_b, const VectorRef& rhs,
                  const std::function<Vector(const Vector&)>& back, const VectorRef& x_ex,
                  const VectorRef& grid);

struct SelectOptions {
  double omega = -1;       // < 0 selects (t+1)/m
  double upsilon = 1.05;   // discrepancy safety factor
  UpreMode upre_mode = UpreMode::Projected;
  // Batched relative-error evaluation over a zeta grid, required for
  // Method::Min. Supplied by the solver, which owns the back-projection.
  std::function<Vector(const VectorRef&)> re_eval;
};

struct RegSelection {
  Method method = Method::Upre;
  double zeta_opt = 0;
  Vector grid;
  Vector values;
  bool refined = false;
  std::string flag;  // empty when clean
};

// Evaluates the objective on the grid; UPRE/GCV/WGCV are then refined by
// golden-section search on log zeta inside the bracketing triple around the
// grid argmin, MDP/PMDP delegate to mdp_solve. Grid ties break toward larger
// zeta.
RegSelection select_parameter(Method method, const SpectralData& sd, const VectorRef& grid,
                              const SelectOptions& opts = {});

}  // namespace gkreg
