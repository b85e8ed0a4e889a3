#pragma once

#include "gkreg/types.hpp"

namespace gkreg {

// Thin SVD M = U diag(gamma) V^T with gamma descending and a reproducible
// sign convention (first nonzero entry of each left singular vector is
// nonnegative). All p = min(m, n) values are retained; the count of values
// above the gamma_1 * 1e-15 cutoff is reported alongside.
struct SvdTriplet {
  Vector gamma;
  Matrix U;
  Matrix V;
  Index rank_above_cutoff = 0;

  Index p() const { return gamma.size(); }
};

SvdTriplet svd(const Eigen::Ref<const Matrix>& M);

// Tikhonov filter factors gamma_i^2 / (gamma_i^2 + zeta^2).
Vector filter_factors(const VectorRef& gamma, double zeta);

// Filtered expansion solution sum_i phi_i (u_i^T b / gamma_i) v_i.
struct FilteredSolution {
  double zeta = 0;
  Vector phi;
  Vector coeffs;  // phi_i * (u_i^T b) / gamma_i
  Vector x;
};

FilteredSolution tikhonov_solve(const SvdTriplet& svd, const VectorRef& b, double zeta);

// Trace of the influence matrix A A^dagger(zeta): sum of the filter factors.
double influence_trace(const VectorRef& gamma, double zeta);

}  // namespace gkreg
