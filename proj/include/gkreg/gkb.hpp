#pragma once

#include <iosfwd>

#include "gkreg/operators.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

// Incremental Golub-Kahan bidiagonalization A G_t = H_{t+1} B_t with
// beta_1 H e_1 = b, where B_t is lower bidiagonal with diagonal theta_j and
// subdiagonal beta_{j+1}. Every new basis vector is reorthogonalized against
// all stored columns (two-pass classical Gram-Schmidt), so the orthogonality
// residuals stay at roundoff even for a few hundred steps.
//
// A factorization in progress belongs to one solve; it is not shared.
class BidiagFactorization {
 public:
  BidiagFactorization(const LinearOperator& op, const VectorRef& b, Index t_capacity,
                      double tol_breakdown = 1e-16,
                      Index max_basis_entries = 200000000);

  Index t() const { return t_; }
  double beta1() const { return beta1_; }
  // theta_1..theta_t and beta_2..beta_{t+1}; raw values, kept even below the
  // breakdown tolerance so downstream diagnostics see them unclipped.
  VectorRef theta() const { return theta_.head(t_); }
  VectorRef betasub() const { return betasub_.head(t_); }
  Eigen::Ref<const Matrix> G() const { return G_.leftCols(t_); }
  // Normally t+1 columns. When the left basis saturates R^m at exact
  // termination the final column does not exist; the matching last row of
  // the bidiagonal block is zero, so A G = H B still holds on these columns.
  Eigen::Ref<const Matrix> H() const { return H_.leftCols(h_cols_); }
  Index h_cols() const { return h_cols_; }

  bool exact_termination() const { return exact_termination_; }
  double operator_norm_estimate() const { return norm_est_; }

  // Assembles the (t_sub+1) x t_sub lower bidiagonal block, t_sub <= t.
  Matrix bidiag_matrix(Index t_sub) const;

 private:
  friend bool gkb_step(BidiagFactorization& state, const LinearOperator& op);

  Index t_ = 0;
  Index h_cols_ = 1;
  Index capacity_;
  double beta1_;
  double tol_breakdown_;
  double norm_est_;
  bool exact_termination_ = false;
  Vector theta_;
  Vector betasub_;
  Matrix G_;
  Matrix H_;
};

// State with t = 0: first column of H is b / ||b||.
BidiagFactorization gkb_init(const LinearOperator& op, const VectorRef& b, Index t_capacity,
                             double tol_breakdown = 1e-16);

// Advances the factorization by one step. Returns false when the Krylov
// space is exhausted (theta or beta fell below tol * ||A||_est); that is
// exact termination, not a failure, and the state remains usable.
bool gkb_step(BidiagFactorization& state, const LinearOperator& op);

// Runs up to t_max steps (t_max <= min(m, n)) or until breakdown.
BidiagFactorization gkb_run(const LinearOperator& op, const VectorRef& b, Index t_max,
                            double tol_breakdown = 1e-16);

// beta_1 * e_1 of length t+1.
Vector projected_rhs(const BidiagFactorization& state);

// Binary dump of (theta, beta, beta_1): "GKB1" magic, two little-endian
// uint64 counts (t, t), then theta, betasub, beta_1 as little-endian
// 64-bit floats.
void dump_gkb(const BidiagFactorization& state, std::ostream& os);

}  // namespace gkreg
