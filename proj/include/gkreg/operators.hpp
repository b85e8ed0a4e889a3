#pragma once

#include <memory>
#include <vector>

#include "gkreg/types.hpp"

namespace gkreg {

// Diagonal weight vector. Depending on context the entries are noise
// variances s_i^2 (rows, whitening) or column scale factors (right
// preconditioning with a diagonal operator).
struct DiagonalWeights {
  Vector values;

  static DiagonalWeights ones(Index n) { return {Vector::Ones(n)}; }
  Index size() const { return values.size(); }
};

// Which columns of an operator take part in a solve. Inactive columns are
// frozen: the compressed operator acts only on the active coordinates.
struct ColumnMask {
  std::vector<char> active;

  static ColumnMask all(Index n) { return {std::vector<char>(static_cast<std::size_t>(n), 1)}; }
  Index size() const { return static_cast<Index>(active.size()); }
  Index active_count() const;
  std::vector<Index> active_indices() const;
};

// Gather the active entries of a full-length vector into compressed order.
Vector gather_active(const ColumnMask& mask, const VectorRef& full);
// Scatter a compressed vector back to full length, zero on frozen indices.
Vector scatter_active(const ColumnMask& mask, const VectorRef& compressed);

// Matrix-free linear map with a transpose. Concrete operators are immutable
// after construction and safe to share between concurrent solves.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  // Forward product A*v. Throws std::invalid_argument on a dimension
  // mismatch or non-finite input.
  Vector apply(const VectorRef& v) const;
  // Transpose product A^T*u.
  Vector apply_transpose(const VectorRef& u) const;

 protected:
  LinearOperator(Index rows, Index cols);

 private:
  virtual void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const = 0;
  virtual void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const = 0;

  Index rows_;
  Index cols_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

OperatorPtr dense_operator(Matrix A);
OperatorPtr identity_operator(Index n);

// Separable 2D convolution with a normalized sampled Gaussian and zero
// boundary conditions, acting on row-major N x N images of length N^2.
OperatorPtr blur_operator(Index N, double psf_sigma, Index psf_halfwidth);

// Parallel-beam ray transform on an N x N pixel grid with exact
// pixel/ray intersection lengths. Angles equispaced over [0, 180) degrees,
// detector bins of width N/n_detectors spanning the image.
OperatorPtr tomo_operator(Index N, Index n_angles, Index n_detectors);

// Row-scale the operator and data by the inverse square roots of the noise
// variances so the whitened noise has unit variance per component.
std::pair<OperatorPtr, Vector> whiten(OperatorPtr op, const VectorRef& b,
                                      const DiagonalWeights& cov);

// v -> A (d .* v); the transpose applies u -> d .* (A^T u).
OperatorPtr column_scaled(OperatorPtr op, DiagonalWeights d);

// m x n_hat operator acting on the compressed coordinates of the active
// columns.
OperatorPtr column_subset(OperatorPtr op, ColumnMask mask);

// Column-by-column densification, column j = apply(e_j). Guarded by an
// entry cap so it is only used at oracle scale.
Matrix to_dense(const LinearOperator& op, Index max_entries = 10000000);

// Power-method estimate of ||A||_2, used to scale tolerances.
double norm_estimate(const LinearOperator& op, int iterations = 10);

}  // namespace gkreg
