#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gkreg/operators.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

// A synthetic inverse problem with known solution. b_ex is either the exact
// quadrature product op(x_ex) or an analytic right-hand side consistent with
// it to discretization accuracy. cov defaults to the unit covariance; noisy
// runs use white_covariance(pi, eta).
struct ProblemInstance {
  OperatorPtr op;
  Vector x_ex;
  Vector b_ex;
  DiagonalWeights cov;
  std::string name;
  std::map<std::string, double> params;
  Index image_n = 0;  // side length when x is an image, else 0
};

// Midpoint discretization on [-6, 6] of the convolution kernel
// 1 + cos(pi (s-t)/3) truncated at |s-t| = 3, with the matching bump
// solution and the analytic right-hand side. Moderately ill-posed.
ProblemInstance phillips(Index m, Index n);

// Midpoint discretization on [0, 1] of d (d^2 + (s-t)^2)^{-3/2} at depth d;
// severely ill-posed, numerically rank deficient for small d.
ProblemInstance gravity(Index m, Index n, double d = 0.75);

// Gaussian blur of a built-in piecewise-constant N x N test image.
ProblemInstance blur2d(Index N, double psf_sigma = 2.5, Index psf_halfwidth = 10);

// Sparse-angle parallel-beam projection of a concentric-disk phantom;
// underdetermined when n_angles * n_detectors < N^2.
ProblemInstance tomo(Index N, Index n_angles, Index n_detectors);

struct NoisySample {
  Vector b;
  double eta = 0;
  std::uint64_t seed = 0;
  int index = 0;
};

// b^c = b_ex + eta ||b_ex|| eps^c with eps from an independent standard
// normal substream per sample (seed = base_seed xor c). Deterministic.
std::vector<NoisySample> add_noise(const ProblemInstance& pi, double eta,
                                   std::uint64_t base_seed, int count);

// Diagonal covariance (eta ||b_ex||)^2 matching add_noise.
DiagonalWeights white_covariance(const ProblemInstance& pi, double eta);

// 20 log10(||b_ex|| / ||b - b_ex||); +inf on noise-free data.
double bsnr(const VectorRef& b_ex, const VectorRef& b);

double relative_error(const VectorRef& x, const VectorRef& x_ex);

// Deterministic standard normal stream (Box-Muller over a 64-bit engine),
// identical across platforms for a given seed.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : state_(seed) {}
  double next();

 private:
  double uniform01();
  std::uint64_t state_;
  double cached_ = 0;
  bool has_cached_ = false;
};

// Dense binary container: "DNS1" magic, little-endian uint64 rows and cols,
// row-major 64-bit floats. Vectors are stored as n x 1.
void write_dns1(const std::string& path, const Matrix& A);
Matrix read_dns1(const std::string& path);

// 16-bit binary PGM of a row-major N x N image, linearly rescaled to the
// full gray range.
void write_pgm(const std::string& path, const VectorRef& image, Index N);

}  // namespace gkreg
