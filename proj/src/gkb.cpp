#include "gkreg/gkb.hpp"

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <stdexcept>

namespace gkreg {

namespace {

// Two passes of classical Gram-Schmidt against the first k columns of Q.
void reorthogonalize(const Matrix& Q, Index k, Vector& v) {
  if (k == 0) return;
  auto basis = Q.leftCols(k);
  for (int pass = 0; pass < 2; ++pass) v.noalias() -= basis * (basis.transpose() * v);
}

// Deterministic orthonormal completion used when a basis vector is requested
// past exact breakdown: the residual direction is roundoff garbage, so take
// the first coordinate vector with a nonnegligible component orthogonal to
// the existing basis instead.
Vector orthonormal_completion(const Matrix& Q, Index k) {
  for (Index c = 0; c < Q.rows(); ++c) {
    Vector v = Vector::Zero(Q.rows());
    v[c] = 1.0;
    reorthogonalize(Q, k, v);
    double n = v.norm();
    if (n > 0.5) return v / n;
  }
  throw std::runtime_error("gkb: no orthonormal completion available");
}

}  // namespace

BidiagFactorization::BidiagFactorization(const LinearOperator& op, const VectorRef& b,
                                         Index t_capacity, double tol_breakdown,
                                         Index max_basis_entries)
    : capacity_(t_capacity), tol_breakdown_(tol_breakdown) {
  const Index m = op.rows(), n = op.cols();
  if (b.size() != m) throw std::invalid_argument("gkb: rhs length != rows");
  if (t_capacity < 1 || t_capacity > std::min(m, n))
    throw std::invalid_argument("gkb: t_max must be in [1, min(m, n)]");
  if (m * (t_capacity + 1) + n * t_capacity > max_basis_entries)
    throw std::invalid_argument("gkb: basis storage exceeds the memory cap");
  beta1_ = b.norm();
  if (beta1_ == 0) throw std::invalid_argument("gkb: zero right-hand side");

  theta_.resize(capacity_);
  betasub_.resize(capacity_);
  G_.resize(n, capacity_);
  H_.resize(m, capacity_ + 1);
  H_.col(0) = b / beta1_;
  norm_est_ = norm_estimate(op);
}

Matrix BidiagFactorization::bidiag_matrix(Index t_sub) const {
  if (t_sub < 1 || t_sub > t_) throw std::invalid_argument("bidiag_matrix: bad size");
  Matrix B = Matrix::Zero(t_sub + 1, t_sub);
  for (Index j = 0; j < t_sub; ++j) {
    B(j, j) = theta_[j];
    B(j + 1, j) = betasub_[j];
  }
  return B;
}

BidiagFactorization gkb_init(const LinearOperator& op, const VectorRef& b, Index t_capacity,
                             double tol_breakdown) {
  return BidiagFactorization(op, b, t_capacity, tol_breakdown);
}

bool gkb_step(BidiagFactorization& s, const LinearOperator& op) {
  if (s.exact_termination_ || s.t_ >= s.capacity_) return false;
  const Index j = s.t_;  // step produces theta_{j+1}, beta_{j+2} (1-based)
  const double tol = s.tol_breakdown_ * std::max(s.norm_est_, 1e-300);

  Vector g = op.apply_transpose(s.H_.col(j));
  if (j > 0) g.noalias() -= s.betasub_[j - 1] * s.G_.col(j - 1);
  reorthogonalize(s.G_, j, g);
  const double theta = g.norm();
  if (theta <= tol) {
    s.exact_termination_ = true;
    return false;
  }
  s.G_.col(j) = g / theta;
  s.theta_[j] = theta;

  Vector h = op.apply(s.G_.col(j));
  h.noalias() -= theta * s.H_.col(j);
  reorthogonalize(s.H_, j + 1, h);
  const double beta = h.norm();
  s.betasub_[j] = beta;  // raw value, even when at the breakdown floor
  s.t_ = j + 1;
  if (j + 1 >= s.H_.rows()) {
    // the left basis spans R^m; the dropped row of B is at roundoff and no
    // further column can exist
    s.h_cols_ = j + 1;
    s.exact_termination_ = true;
    return false;
  }
  if (beta <= tol) {
    // exact termination: the residual direction is gone; pad the basis so H
    // keeps its t+1 orthonormal columns
    s.H_.col(j + 1) = orthonormal_completion(s.H_, j + 1);
    s.h_cols_ = j + 2;
    s.exact_termination_ = true;
    return false;
  }
  s.H_.col(j + 1) = h / beta;
  s.h_cols_ = j + 2;
  return true;
}

BidiagFactorization gkb_run(const LinearOperator& op, const VectorRef& b, Index t_max,
                            double tol_breakdown) {
  BidiagFactorization s = gkb_init(op, b, t_max, tol_breakdown);
  while (s.t() < t_max && gkb_step(s, op)) {
  }
  return s;
}

Vector projected_rhs(const BidiagFactorization& s) {
  if (s.t() < 1) throw std::invalid_argument("projected_rhs: no steps taken");
  Vector e = Vector::Zero(s.t() + 1);
  e[0] = s.beta1();
  return e;
}

void dump_gkb(const BidiagFactorization& s, std::ostream& os) {
  os.write("GKB1", 4);
  const std::uint64_t t = static_cast<std::uint64_t>(s.t());
  os.write(reinterpret_cast<const char*>(&t), 8);
  os.write(reinterpret_cast<const char*>(&t), 8);
  os.write(reinterpret_cast<const char*>(s.theta().data()), static_cast<std::streamsize>(8 * t));
  os.write(reinterpret_cast<const char*>(s.betasub().data()), static_cast<std::streamsize>(8 * t));
  const double b1 = s.beta1();
  os.write(reinterpret_cast<const char*>(&b1), 8);
}

}  // namespace gkreg
