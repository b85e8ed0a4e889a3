#include "gkreg/svdcore.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace gkreg {

SvdTriplet svd(const Eigen::Ref<const Matrix>& M) {
  if (M.rows() < 1 || M.cols() < 1) throw std::invalid_argument("svd: empty matrix");
  if (!M.allFinite()) throw std::invalid_argument("svd: non-finite entries");

  Eigen::JacobiSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) throw std::runtime_error("svd: did not converge");

  SvdTriplet out;
  out.gamma = dec.singularValues();
  out.U = dec.matrixU();
  out.V = dec.matrixV();

  for (Index j = 0; j < out.U.cols(); ++j) {
    for (Index i = 0; i < out.U.rows(); ++i) {
      if (out.U(i, j) != 0.0) {
        if (out.U(i, j) < 0.0) {
          out.U.col(j) = -out.U.col(j);
          out.V.col(j) = -out.V.col(j);
        }
        break;
      }
    }
  }

  const double cutoff = out.gamma.size() > 0 ? out.gamma[0] * 1e-15 : 0.0;
  out.rank_above_cutoff = (out.gamma.array() > cutoff).count();
  return out;
}

Vector filter_factors(const VectorRef& gamma, double zeta) {
  if (!(zeta >= 0)) throw std::invalid_argument("filter_factors: zeta must be >= 0");
  Eigen::ArrayXd g2 = gamma.array().square();
  return (g2 / (g2 + zeta * zeta)).matrix();
}

FilteredSolution tikhonov_solve(const SvdTriplet& svd, const VectorRef& b, double zeta) {
  if (b.size() != svd.U.rows()) throw std::invalid_argument("tikhonov_solve: rhs length mismatch");
  if (!(zeta >= 0)) throw std::invalid_argument("tikhonov_solve: zeta must be >= 0");
  if (zeta == 0.0 && svd.rank_above_cutoff < svd.p())
    throw std::runtime_error("tikhonov_solve: singular solve at zeta = 0 (rank-deficient)");

  FilteredSolution out;
  out.zeta = zeta;
  out.phi = filter_factors(svd.gamma, zeta);
  Vector bhat = svd.U.transpose() * b;
  out.coeffs = out.phi.cwiseProduct(bhat).cwiseQuotient(svd.gamma);
  out.x = svd.V * out.coeffs;
  return out;
}

double influence_trace(const VectorRef& gamma, double zeta) {
  return filter_factors(gamma, zeta).sum();
}

}  // namespace gkreg
