#include "gkreg/regparam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gkreg {

const char* method_name(Method m) {
  switch (m) {
    case Method::Min: return "MIN";
    case Method::Mdp: return "MDP";
    case Method::Upre: return "UPRE";
    case Method::Gcv: return "GCV";
    case Method::Wgcv: return "WGCV";
    case Method::Pmdp: return "PMDP";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::Min, Method::Mdp, Method::Upre, Method::Gcv, Method::Wgcv, Method::Pmdp})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + name);
}

SpectralData project_spectrum(const SvdTriplet& svd_b, double beta1, Index m_full) {
  if (svd_b.U.rows() != svd_b.p() + 1)
    throw std::invalid_argument("project_spectrum: expected a (t+1) x t factorization");
  SpectralData sd;
  sd.t = svd_b.p();
  sd.m_full = m_full;
  sd.gamma = svd_b.gamma;
  sd.bhat.resize(sd.t + 1);
  sd.bhat.head(sd.t) = beta1 * svd_b.U.row(0).transpose();
  const double rem = beta1 * beta1 - sd.bhat.head(sd.t).squaredNorm();
  sd.bhat[sd.t] = std::sqrt(std::max(0.0, rem));
  return sd;
}

Vector zeta_grid(double lo, double hi, Index count) {
  if (!(lo > 0)) throw std::invalid_argument("zeta_grid: lo must be > 0");
  if (!(hi > lo)) throw std::invalid_argument("zeta_grid: hi must exceed lo");
  if (count < 2) throw std::invalid_argument("zeta_grid: need at least 2 points");
  Vector g(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (Index i = 0; i < count; ++i)
    g[i] = std::exp(llo + (lhi - llo) * double(i) / double(count - 1));
  g[0] = lo;
  g[count - 1] = hi;
  return g;
}

namespace {

// Shared pieces of the spectral objectives at one zeta:
// resid = sum (1-phi_i)^2 bhat_i^2 + bhat_{t+1}^2,  trace = sum phi_i.
struct SpectralTerms {
  double resid;
  double trace;
};

SpectralTerms terms_at(const SpectralData& sd, double zeta) {
  const double z2 = zeta * zeta;
  double resid = sd.bhat[sd.t] * sd.bhat[sd.t];
  double trace = 0;
  for (Index i = 0; i < sd.t; ++i) {
    const double g2 = sd.gamma[i] * sd.gamma[i];
    const double one_minus_phi = z2 / (g2 + z2);
    resid += one_minus_phi * one_minus_phi * sd.bhat[i] * sd.bhat[i];
    trace += g2 / (g2 + z2);
  }
  return {resid, trace};
}

}  // namespace

double upre(const SpectralData& sd, double zeta, UpreMode mode) {
  if (!(zeta >= 0)) throw std::invalid_argument("upre: zeta must be >= 0");
  const auto [resid, trace] = terms_at(sd, zeta);
  const double dof = mode == UpreMode::Projected ? double(sd.t + 1) : double(sd.m_full);
  return resid + 2.0 * trace - dof;
}

double gcv_w(const SpectralData& sd, double zeta, double omega) {
  if (!(zeta >= 0)) throw std::invalid_argument("gcv_w: zeta must be >= 0");
  if (!(omega >= 0 && omega <= 1)) throw std::invalid_argument("gcv_w: omega must be in [0, 1]");
  const auto [resid, trace] = terms_at(sd, zeta);
  // (1 + t - omega t) + omega zeta^2 sum (gamma^2+zeta^2)^-1, written via
  // sum (1 - phi) = t - trace
  const double den = (1.0 + double(sd.t) - omega * double(sd.t)) + omega * (double(sd.t) - trace);
  if (den == 0) throw std::runtime_error("gcv_w: zero denominator");
  return resid / (den * den);
}

double mdp_residual(const SpectralData& sd, double zeta) {
  if (!(zeta >= 0)) throw std::invalid_argument("mdp_residual: zeta must be >= 0");
  return terms_at(sd, zeta).resid;
}

MdpRoot mdp_solve(const SpectralData& sd, double delta, std::pair<double, double> bracket) {
  if (!(delta > 0)) throw std::invalid_argument("mdp_solve: delta must be > 0");
  auto [lo, hi] = bracket;
  if (!(lo > 0 && hi > lo)) throw std::invalid_argument("mdp_solve: bad bracket");

  const double r_lo = mdp_residual(sd, lo);
  const double r_hi = mdp_residual(sd, hi);
  if (r_lo > delta) return {lo, MdpRoot::NoRootAbove};
  if (r_hi < delta) return {hi, MdpRoot::NoRootBelow};

  // Newton on f(s) = R(e^s) - delta with bisection safeguard. dR/dzeta has a
  // closed form through the filter factors.
  double a = std::log(lo), b = std::log(hi);
  double s = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    const double zeta = std::exp(s);
    const double r = mdp_residual(sd, zeta);
    if (std::abs(r - delta) <= 1e-10 * delta) return {zeta, MdpRoot::Ok};
    if (r < delta)
      a = s;
    else
      b = s;
    const double z2 = zeta * zeta;
    double dr_dz = 0;  // d resid / d zeta
    for (Index i = 0; i < sd.t; ++i) {
      const double g2 = sd.gamma[i] * sd.gamma[i];
      const double d = g2 + z2;
      // d/dzeta [ (zeta^2/d)^2 bhat^2 ] = 4 zeta^3 g2 / d^3 * bhat^2
      dr_dz += 4.0 * zeta * z2 * g2 / (d * d * d) * sd.bhat[i] * sd.bhat[i];
    }
    const double df_ds = dr_dz * zeta;  // chain rule, zeta = e^s
    double s_next = df_ds > 0 ? s - (r - delta) / df_ds : a - 1;  // force fallback if flat
    if (!(s_next > a && s_next < b)) s_next = 0.5 * (a + b);
    s = s_next;
  }
  return {std::exp(s), MdpRoot::Ok};
}

double min_oracle(const SvdTriplet& svd_b, const VectorRef& rhs,
                  const std::function<Vector(const Vector&)>& back, const VectorRef& x_ex,
                  const VectorRef& grid) {
  if (grid.size() < 1) throw std::invalid_argument("min_oracle: empty grid");
  const double nx = x_ex.norm();
  if (!(nx > 0)) throw std::invalid_argument("min_oracle: zero exact solution");
  double best_re = std::numeric_limits<double>::infinity();
  double best_zeta = grid[0];
  for (Index i = 0; i < grid.size(); ++i) {
    const Vector w = tikhonov_solve(svd_b, rhs, grid[i]).x;
    const double re = (back(w) - x_ex).norm() / nx;
    if (re <= best_re) {  // ties toward larger zeta
      best_re = re;
      best_zeta = grid[i];
    }
  }
  return best_zeta;
}

namespace {

double objective(Method method, const SpectralData& sd, double zeta, const SelectOptions& opts,
                 double omega) {
  switch (method) {
    case Method::Upre: return upre(sd, zeta, opts.upre_mode);
    case Method::Gcv: return gcv_w(sd, zeta, 1.0);
    case Method::Wgcv: return gcv_w(sd, zeta, omega);
    case Method::Mdp:
    case Method::Pmdp: return mdp_residual(sd, zeta);
    case Method::Min: break;
  }
  throw std::logic_error("objective: unsupported method");
}

// Golden-section minimization on log zeta inside [lo, hi].
double golden_refine(const std::function<double(double)>& f, double lo, double hi,
                     int iterations = 40, double rel_tol = 1e-6) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  for (int it = 0; it < iterations && (b - a) > rel_tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(std::exp(d));
    }
  }
  return fc <= fd ? std::exp(c) : std::exp(d);
}

}  // namespace

RegSelection select_parameter(Method method, const SpectralData& sd, const VectorRef& grid,
                              const SelectOptions& opts) {
  if (grid.size() < 1) throw std::invalid_argument("select_parameter: empty grid");
  for (Index i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("select_parameter: grid not ascending");

  RegSelection sel;
  sel.method = method;
  sel.grid = grid;
  sel.values.resize(grid.size());

  const double omega = opts.omega >= 0 ? opts.omega : double(sd.t + 1) / double(sd.m_full);

  if (method == Method::Min) {
    if (!opts.re_eval) throw std::invalid_argument("select_parameter: MIN needs an error closure");
    sel.values = opts.re_eval(grid);
    if (sel.values.size() != grid.size())
      throw std::runtime_error("select_parameter: error closure returned wrong length");
  } else if (method == Method::Mdp || method == Method::Pmdp) {
    for (Index i = 0; i < grid.size(); ++i) sel.values[i] = mdp_residual(sd, grid[i]);
    const double dof = method == Method::Mdp ? double(sd.m_full) : double(sd.t + 1);
    const MdpRoot root = mdp_solve(sd, opts.upsilon * dof, {grid[0], grid[grid.size() - 1]});
    sel.zeta_opt = root.zeta;
    if (root.flag == MdpRoot::NoRootBelow) sel.flag = "noroot_below";
    if (root.flag == MdpRoot::NoRootAbove) sel.flag = "noroot_above";
    sel.refined = true;
    return sel;
  } else {
    for (Index i = 0; i < grid.size(); ++i) sel.values[i] = objective(method, sd, grid[i], opts, omega);
  }

  Index arg = 0;
  for (Index i = 1; i < grid.size(); ++i)
    if (sel.values[i] <= sel.values[arg]) arg = i;  // ties toward larger zeta
  sel.zeta_opt = grid[arg];

  const double span = sel.values.maxCoeff() - sel.values.minCoeff();
  if (span <= 1e-12 * std::max(1.0, std::abs(sel.values[arg])) && grid.size() > 1)
    sel.flag = "flat_objective";

  if (method != Method::Min && grid.size() >= 2) {
    const double lo = grid[std::max<Index>(arg - 1, 0)];
    const double hi = grid[std::min<Index>(arg + 1, grid.size() - 1)];
    if (hi > lo) {
      auto f = [&](double z) { return objective(method, sd, z, opts, omega); };
      const double zr = golden_refine(f, lo, hi);
      if (f(zr) < sel.values[arg]) {
        sel.zeta_opt = zr;
        sel.refined = true;
      }
    }
  }
  return sel;
}

}  // namespace gkreg
