#include "gkreg/operators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace gkreg {

Index ColumnMask::active_count() const {
  Index n = 0;
  for (char a : active) n += (a != 0);
  return n;
}

std::vector<Index> ColumnMask::active_indices() const {
  std::vector<Index> idx;
  idx.reserve(active.size());
  for (Index i = 0; i < size(); ++i)
    if (active[static_cast<std::size_t>(i)]) idx.push_back(i);
  return idx;
}

Vector gather_active(const ColumnMask& mask, const VectorRef& full) {
  if (full.size() != mask.size()) throw std::invalid_argument("gather_active: length mismatch");
  Vector out(mask.active_count());
  Index j = 0;
  for (Index i = 0; i < mask.size(); ++i)
    if (mask.active[static_cast<std::size_t>(i)]) out[j++] = full[i];
  return out;
}

Vector scatter_active(const ColumnMask& mask, const VectorRef& compressed) {
  if (compressed.size() != mask.active_count())
    throw std::invalid_argument("scatter_active: length mismatch");
  Vector out = Vector::Zero(mask.size());
  Index j = 0;
  for (Index i = 0; i < mask.size(); ++i)
    if (mask.active[static_cast<std::size_t>(i)]) out[i] = compressed[j++];
  return out;
}

LinearOperator::LinearOperator(Index rows, Index cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("operator dimensions must be positive");
}

Vector LinearOperator::apply(const VectorRef& v) const {
  if (v.size() != cols_) throw std::invalid_argument("apply: input length != cols");
  if (!v.allFinite()) throw std::invalid_argument("apply: non-finite input");
  Vector out(rows_);
  apply_impl(v, out);
  return out;
}

Vector LinearOperator::apply_transpose(const VectorRef& u) const {
  if (u.size() != rows_) throw std::invalid_argument("apply_transpose: input length != rows");
  if (!u.allFinite()) throw std::invalid_argument("apply_transpose: non-finite input");
  Vector out(cols_);
  apply_transpose_impl(u, out);
  return out;
}

namespace {

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix A) : LinearOperator(A.rows(), A.cols()), A_(std::move(A)) {
    if (!A_.allFinite()) throw std::invalid_argument("dense operator: non-finite entries");
  }

 private:
  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override { out = A_ * v; }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    out = A_.transpose() * u;
  }
  Matrix A_;
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(Index n) : LinearOperator(n, n) {}

 private:
  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override { out = v; }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override { out = u; }
};

class RowScaledOperator final : public LinearOperator {
 public:
  RowScaledOperator(OperatorPtr inner, Vector row_scale)
      : LinearOperator(inner->rows(), inner->cols()),
        inner_(std::move(inner)),
        row_scale_(std::move(row_scale)) {}

 private:
  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override {
    out = row_scale_.cwiseProduct(inner_->apply(v));
  }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    out = inner_->apply_transpose(row_scale_.cwiseProduct(u));
  }
  OperatorPtr inner_;
  Vector row_scale_;
};

class ColumnScaledOperator final : public LinearOperator {
 public:
  ColumnScaledOperator(OperatorPtr inner, Vector col_scale)
      : LinearOperator(inner->rows(), inner->cols()),
        inner_(std::move(inner)),
        col_scale_(std::move(col_scale)) {}

 private:
  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override {
    out = inner_->apply(col_scale_.cwiseProduct(v));
  }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    out = col_scale_.cwiseProduct(inner_->apply_transpose(u));
  }
  OperatorPtr inner_;
  Vector col_scale_;
};

class ColumnSubsetOperator final : public LinearOperator {
 public:
  ColumnSubsetOperator(OperatorPtr inner, ColumnMask mask)
      : LinearOperator(inner->rows(), mask.active_count()),
        inner_(std::move(inner)),
        mask_(std::move(mask)) {}

 private:
  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override {
    out = inner_->apply(scatter_active(mask_, v));
  }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    out = gather_active(mask_, inner_->apply_transpose(u));
  }
  OperatorPtr inner_;
  ColumnMask mask_;
};

// C X C^T on row-major images, where C is the banded 1D convolution matrix
// of the sampled kernel. The Gaussian kernel is even, so C is symmetric and
// the operator is self-adjoint; the transpose path is kept explicit anyway.
class BlurOperator final : public LinearOperator {
 public:
  BlurOperator(Index N, double sigma, Index halfwidth)
      : LinearOperator(N * N, N * N), N_(N) {
    if (N < 2) throw std::invalid_argument("blur: N too small");
    if (halfwidth < 0 || halfwidth >= N) throw std::invalid_argument("blur: halfwidth out of range");
    if (!(sigma >= 0)) throw std::invalid_argument("blur: sigma must be nonnegative");
    Vector k(2 * halfwidth + 1);
    for (Index p = -halfwidth; p <= halfwidth; ++p) {
      double e = (sigma > 0) ? std::exp(-0.5 * double(p) * double(p) / (sigma * sigma))
                             : (p == 0 ? 1.0 : 0.0);
      k[p + halfwidth] = e;
    }
    k /= k.sum();
    C_ = Matrix::Zero(N, N);
    for (Index i = 0; i < N; ++i)
      for (Index p = -halfwidth; p <= halfwidth; ++p) {
        Index j = i - p;
        if (j >= 0 && j < N) C_(i, j) = k[p + halfwidth];
      }
  }

 private:
  using ImageMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ImageOut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override {
    ImageMap X(v.data(), N_, N_);
    ImageOut Y(out.data(), N_, N_);
    Y = C_ * X * C_.transpose();
  }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    ImageMap X(u.data(), N_, N_);
    ImageOut Y(out.data(), N_, N_);
    Y = C_.transpose() * X * C_;
  }

  Index N_;
  Matrix C_;
};

// Sparse ray/pixel intersection lengths, one compressed row per ray.
class TomoOperator final : public LinearOperator {
 public:
  TomoOperator(Index N, Index n_angles, Index n_detectors)
      : LinearOperator(n_angles * n_detectors, N * N), N_(N) {
    if (n_angles < 1 || n_detectors < 1) throw std::invalid_argument("tomo: need rays");
    const double half = 0.5 * double(N);
    const double dr = double(N) / double(n_detectors);
    row_start_.reserve(static_cast<std::size_t>(rows()) + 1);
    row_start_.push_back(0);
    for (Index a = 0; a < n_angles; ++a) {
      const double th = M_PI * double(a) / double(n_angles);
      const double nx = std::cos(th), ny = std::sin(th);   // ray normal
      const double dx = -ny, dy = nx;                      // ray direction
      for (Index kdet = 0; kdet < n_detectors; ++kdet) {
        const double r = (double(kdet) + 0.5 - 0.5 * double(n_detectors)) * dr;
        trace_ray(r * nx, r * ny, dx, dy, half);
        row_start_.push_back(static_cast<Index>(entries_.size()));
      }
    }
  }

 private:
  // Siddon-style traversal: march the parametric ray through the pixel grid,
  // recording the intersection length with each crossed cell.
  void trace_ray(double px, double py, double dx, double dy, double half) {
    const double tiny = 1e-12;
    double t_lo = -2.0 * half * double(N_), t_hi = 2.0 * half * double(N_);
    // clip against x slabs then y slabs
    for (int axis = 0; axis < 2; ++axis) {
      double p = axis == 0 ? px : py;
      double d = axis == 0 ? dx : dy;
      if (std::abs(d) < tiny) {
        if (p <= -half || p >= half) return;  // parallel and outside
      } else {
        double ta = (-half - p) / d, tb = (half - p) / d;
        if (ta > tb) std::swap(ta, tb);
        t_lo = std::max(t_lo, ta);
        t_hi = std::min(t_hi, tb);
      }
    }
    if (t_hi <= t_lo + tiny) return;
    double t = t_lo;
    while (t < t_hi - tiny) {
      const double xm = px + (t + tiny) * dx;
      const double ym = py + (t + tiny) * dy;
      const Index cx = static_cast<Index>(std::floor(xm + half));
      const Index cy = static_cast<Index>(std::floor(ym + half));
      if (cx < 0 || cx >= N_ || cy < 0 || cy >= N_) break;
      // exit parameter of the current cell
      double t_next = t_hi;
      if (std::abs(dx) >= tiny) {
        const double edge = (dx > 0 ? double(cx + 1) : double(cx)) - half;
        t_next = std::min(t_next, (edge - px) / dx);
      }
      if (std::abs(dy) >= tiny) {
        const double edge = (dy > 0 ? double(cy + 1) : double(cy)) - half;
        t_next = std::min(t_next, (edge - py) / dy);
      }
      if (t_next <= t + tiny) t_next = t + tiny;
      const double len = std::min(t_next, t_hi) - t;
      if (len > tiny) entries_.emplace_back(cy * N_ + cx, len);
      t = t_next;
    }
  }

  void apply_impl(const VectorRef& v, Eigen::Ref<Vector> out) const override {
    for (Index i = 0; i < rows(); ++i) {
      double s = 0;
      for (Index e = row_start_[static_cast<std::size_t>(i)];
           e < row_start_[static_cast<std::size_t>(i) + 1]; ++e)
        s += entries_[static_cast<std::size_t>(e)].second * v[entries_[static_cast<std::size_t>(e)].first];
      out[i] = s;
    }
  }
  void apply_transpose_impl(const VectorRef& u, Eigen::Ref<Vector> out) const override {
    out.setZero();
    for (Index i = 0; i < rows(); ++i)
      for (Index e = row_start_[static_cast<std::size_t>(i)];
           e < row_start_[static_cast<std::size_t>(i) + 1]; ++e)
        out[entries_[static_cast<std::size_t>(e)].first] += entries_[static_cast<std::size_t>(e)].second * u[i];
  }

  Index N_;
  std::vector<std::pair<Index, double>> entries_;
  std::vector<Index> row_start_;
};

}  // namespace

OperatorPtr dense_operator(Matrix A) { return std::make_shared<DenseOperator>(std::move(A)); }

OperatorPtr identity_operator(Index n) { return std::make_shared<IdentityOperator>(n); }

OperatorPtr blur_operator(Index N, double psf_sigma, Index psf_halfwidth) {
  return std::make_shared<BlurOperator>(N, psf_sigma, psf_halfwidth);
}

OperatorPtr tomo_operator(Index N, Index n_angles, Index n_detectors) {
  return std::make_shared<TomoOperator>(N, n_angles, n_detectors);
}

std::pair<OperatorPtr, Vector> whiten(OperatorPtr op, const VectorRef& b,
                                      const DiagonalWeights& cov) {
  if (cov.size() != op->rows()) throw std::invalid_argument("whiten: covariance length != rows");
  if ((cov.values.array() <= 0).any() || !cov.values.allFinite())
    throw std::invalid_argument("whiten: covariance entries must be positive and finite");
  Vector w = cov.values.array().rsqrt();
  Vector bw = w.cwiseProduct(b);
  return {std::make_shared<RowScaledOperator>(std::move(op), std::move(w)), std::move(bw)};
}

OperatorPtr column_scaled(OperatorPtr op, DiagonalWeights d) {
  if (d.size() != op->cols()) throw std::invalid_argument("column_scaled: length != cols");
  if (!d.values.allFinite()) throw std::invalid_argument("column_scaled: non-finite scale");
  return std::make_shared<ColumnScaledOperator>(std::move(op), std::move(d.values));
}

OperatorPtr column_subset(OperatorPtr op, ColumnMask mask) {
  if (mask.size() != op->cols()) throw std::invalid_argument("column_subset: mask length != cols");
  if (mask.active_count() < 1) throw std::invalid_argument("column_subset: empty mask");
  return std::make_shared<ColumnSubsetOperator>(std::move(op), std::move(mask));
}

Matrix to_dense(const LinearOperator& op, Index max_entries) {
  if (op.rows() * op.cols() > max_entries)
    throw std::invalid_argument("to_dense: entry cap exceeded");
  Matrix A(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    A.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return A;
}

double norm_estimate(const LinearOperator& op, int iterations) {
  std::mt19937_64 eng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(op.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(eng);
  v.normalize();
  double lambda = 0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = op.apply_transpose(op.apply(v));
    lambda = w.norm();
    if (lambda == 0) return 0;
    v = w / lambda;
  }
  return std::sqrt(lambda);
}

}  // namespace gkreg
