#include "gkreg/problems.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gkreg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double phillips_kernel(double u) {
  return std::abs(u) < 3.0 ? 1.0 + std::cos(kPi * u / 3.0) : 0.0;
}

double phillips_rhs(double s) {
  const double a = std::abs(s);
  return (6.0 - a) * (1.0 + 0.5 * std::cos(kPi * s / 3.0)) +
         9.0 / (2.0 * kPi) * std::sin(kPi * a / 3.0);
}

}  // namespace

ProblemInstance phillips(Index m, Index n) {
  if (m < 8 || n < 8) throw std::invalid_argument("phillips: m, n must be >= 8");
  const double hs = 12.0 / double(m), ht = 12.0 / double(n);
  Matrix A(m, n);
  Vector x(n), b(m);
  for (Index j = 0; j < n; ++j) {
    const double t = -6.0 + (double(j) + 0.5) * ht;
    x[j] = phillips_kernel(t);
    for (Index i = 0; i < m; ++i) {
      const double s = -6.0 + (double(i) + 0.5) * hs;
      A(i, j) = ht * phillips_kernel(s - t);
    }
  }
  for (Index i = 0; i < m; ++i) b[i] = phillips_rhs(-6.0 + (double(i) + 0.5) * hs);

  ProblemInstance pi;
  pi.op = dense_operator(std::move(A));
  pi.x_ex = std::move(x);
  pi.b_ex = std::move(b);
  pi.cov = DiagonalWeights::ones(m);
  pi.name = "phillips";
  pi.params = {{"m", double(m)}, {"n", double(n)}};
  return pi;
}

ProblemInstance gravity(Index m, Index n, double d) {
  if (m < 8 || n < 8) throw std::invalid_argument("gravity: m, n must be >= 8");
  if (!(d > 0)) throw std::invalid_argument("gravity: d must be > 0");
  Matrix A(m, n);
  Vector x(n);
  for (Index j = 0; j < n; ++j) {
    const double t = (double(j) + 0.5) / double(n);
    x[j] = std::sin(kPi * t) + 0.5 * std::sin(2.0 * kPi * t);
    for (Index i = 0; i < m; ++i) {
      const double s = (double(i) + 0.5) / double(m);
      A(i, j) = (1.0 / double(n)) * d * std::pow(d * d + (s - t) * (s - t), -1.5);
    }
  }
  ProblemInstance pi;
  pi.x_ex = std::move(x);
  pi.b_ex = A * pi.x_ex;
  pi.op = dense_operator(std::move(A));
  pi.cov = DiagonalWeights::ones(m);
  pi.name = "gravity";
  pi.params = {{"m", double(m)}, {"n", double(n)}, {"d", d}};
  return pi;
}

namespace {

// Piecewise-constant test image: two rectangles and a disk of distinct
// intensities on a zero background. Sharp edges on purpose.
Vector blocks_image(Index N) {
  Vector img = Vector::Zero(N * N);
  auto at = [&](Index r, Index c) -> double& { return img[r * N + c]; };
  const auto lo1 = Index(0.15 * double(N)), hi1 = Index(0.45 * double(N));
  for (Index r = lo1; r < hi1; ++r)
    for (Index c = lo1; c < hi1; ++c) at(r, c) = 1.0;
  const auto lo2 = Index(0.30 * double(N)), hi2 = Index(0.58 * double(N));
  for (Index r = lo2; r < hi2; ++r)
    for (Index c = lo2; c < hi2; ++c) at(r, c) = 0.6;
  const double cx = 0.68 * double(N), cy = 0.33 * double(N), rad = 0.14 * double(N);
  for (Index r = 0; r < N; ++r)
    for (Index c = 0; c < N; ++c) {
      const double dx = double(c) + 0.5 - cx, dy = double(r) + 0.5 - cy;
      if (dx * dx + dy * dy <= rad * rad) at(r, c) = 1.4;
    }
  return img;
}

// Concentric disks sampled at pixel centers.
Vector disks_phantom(Index N) {
  Vector img = Vector::Zero(N * N);
  const double c0 = 0.5 * double(N);
  for (Index r = 0; r < N; ++r)
    for (Index c = 0; c < N; ++c) {
      const double dx = double(c) + 0.5 - c0, dy = double(r) + 0.5 - c0;
      const double rr = std::sqrt(dx * dx + dy * dy) / double(N);
      double v = 0.0;
      if (rr <= 0.42) v = 1.0;
      if (rr <= 0.28) v = 0.4;
      if (rr <= 0.15) v = 1.5;
      img[r * N + c] = v;
    }
  return img;
}

}  // namespace

ProblemInstance blur2d(Index N, double psf_sigma, Index psf_halfwidth) {
  if (N < 16) throw std::invalid_argument("blur2d: N must be >= 16");
  ProblemInstance pi;
  pi.op = blur_operator(N, psf_sigma, psf_halfwidth);
  pi.x_ex = blocks_image(N);
  pi.b_ex = pi.op->apply(pi.x_ex);
  pi.cov = DiagonalWeights::ones(N * N);
  pi.name = "blur2d";
  pi.params = {{"N", double(N)}, {"sigma", psf_sigma}, {"halfwidth", double(psf_halfwidth)}};
  pi.image_n = N;
  return pi;
}

ProblemInstance tomo(Index N, Index n_angles, Index n_detectors) {
  if (N < 16) throw std::invalid_argument("tomo: N must be >= 16");
  if (n_angles < 1) throw std::invalid_argument("tomo: n_angles must be >= 1");
  ProblemInstance pi;
  pi.op = tomo_operator(N, n_angles, n_detectors);
  pi.x_ex = disks_phantom(N);
  pi.b_ex = pi.op->apply(pi.x_ex);
  pi.cov = DiagonalWeights::ones(n_angles * n_detectors);
  pi.name = "tomo";
  pi.params = {{"N", double(N)}, {"angles", double(n_angles)}, {"detectors", double(n_detectors)}};
  pi.image_n = N;
  return pi;
}

double NormalStream::uniform01() {
  // splitmix64; top 53 bits give a double in (0, 1)
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return double(z >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double NormalStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform01(), u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * kPi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::vector<NoisySample> add_noise(const ProblemInstance& pi, double eta,
                                   std::uint64_t base_seed, int count) {
  if (!(eta >= 0)) throw std::invalid_argument("add_noise: eta must be >= 0");
  const double s = eta * pi.b_ex.norm();
  std::vector<NoisySample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 1; c <= count; ++c) {
    NoisySample ns;
    ns.eta = eta;
    ns.index = c;
    ns.seed = base_seed ^ static_cast<std::uint64_t>(c);
    ns.b = pi.b_ex;
    if (s > 0) {
      NormalStream rng(ns.seed);
      for (Index i = 0; i < ns.b.size(); ++i) ns.b[i] += s * rng.next();
    }
    out.push_back(std::move(ns));
  }
  return out;
}

DiagonalWeights white_covariance(const ProblemInstance& pi, double eta) {
  const double s = eta * pi.b_ex.norm();
  if (!(s > 0)) throw std::invalid_argument("white_covariance: zero noise scale");
  return {Vector::Constant(pi.op->rows(), s * s)};
}

double bsnr(const VectorRef& b_ex, const VectorRef& b) {
  const double noise = (b - b_ex).norm();
  if (noise == 0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(b_ex.norm() / noise);
}

double relative_error(const VectorRef& x, const VectorRef& x_ex) {
  const double nx = x_ex.norm();
  if (!(nx > 0)) throw std::invalid_argument("relative_error: zero exact solution");
  return (x - x_ex).norm() / nx;
}

void write_dns1(const std::string& path, const Matrix& A) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_dns1: cannot open " + path);
  os.write("DNS1", 4);
  const std::uint64_t r = static_cast<std::uint64_t>(A.rows());
  const std::uint64_t c = static_cast<std::uint64_t>(A.cols());
  os.write(reinterpret_cast<const char*>(&r), 8);
  os.write(reinterpret_cast<const char*>(&c), 8);
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) {
      const double v = A(i, j);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!os) throw std::runtime_error("write_dns1: write failed");
}

Matrix read_dns1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_dns1: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "DNS1") throw std::runtime_error("read_dns1: bad magic");
  std::uint64_t r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&r), 8);
  is.read(reinterpret_cast<char*>(&c), 8);
  Matrix A(static_cast<Index>(r), static_cast<Index>(c));
  for (std::uint64_t i = 0; i < r; ++i)
    for (std::uint64_t j = 0; j < c; ++j) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      A(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  if (!is) throw std::runtime_error("read_dns1: truncated file");
  return A;
}

void write_pgm(const std::string& path, const VectorRef& image, Index N) {
  if (image.size() != N * N) throw std::invalid_argument("write_pgm: not an N x N image");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  const double lo = image.minCoeff(), hi = image.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  os << "P5\n" << N << " " << N << "\n65535\n";
  for (Index i = 0; i < image.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::lround((image[i] - lo) / span * 65535.0));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(bytes, 2);
  }
  if (!os) throw std::runtime_error("write_pgm: write failed");
}

}  // namespace gkreg
