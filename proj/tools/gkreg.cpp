// Command-line harness: problem generation, single hybrid solves, the
// iteratively reweighted loop, multi-sample sweeps, table summaries, and SVG
// plots of the emitted CSVs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gkreg/experiment.hpp"
#include "gkreg/plot.hpp"
#include "gkreg/problems.hpp"
#include "gkreg/solver.hpp"
#include "gkreg/svdcore.hpp"

namespace fs = std::filesystem;
using namespace gkreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct ProblemFlags {
  std::string name = "phillips";
  Index m = 152, n = 304;
  double d = 0.75;
  Index N = 64;
  double sigma = 2.0;
  Index halfwidth = 8;
  Index angles = 30, detectors = 64;

  void attach(CLI::App* cmd) {
    cmd->add_option("--problem", name, "phillips | gravity | blur2d | tomo")
        ->check(CLI::IsMember({"phillips", "gravity", "blur2d", "tomo"}));
    cmd->add_option("--m", m, "rows (1D problems)");
    cmd->add_option("--n", n, "columns (1D problems)");
    cmd->add_option("--d", d, "gravity depth parameter");
    cmd->add_option("--N", N, "image side (2D problems)");
    cmd->add_option("--psf-sigma", sigma, "blur PSF width");
    cmd->add_option("--psf-halfwidth", halfwidth, "blur PSF half support");
    cmd->add_option("--angles", angles, "tomo projection count");
    cmd->add_option("--detectors", detectors, "tomo detector count");
  }

  std::map<std::string, double> params() const {
    if (name == "phillips") return {{"m", double(m)}, {"n", double(n)}};
    if (name == "gravity") return {{"m", double(m)}, {"n", double(n)}, {"d", d}};
    if (name == "blur2d")
      return {{"N", double(N)}, {"sigma", sigma}, {"halfwidth", double(halfwidth)}};
    return {{"N", double(N)}, {"angles", double(angles)}, {"detectors", double(detectors)}};
  }

  ProblemInstance make() const { return make_problem(name, params()); }
  bool is_2d() const { return name == "blur2d" || name == "tomo"; }
};

struct SolveFlags {
  double eta = 0.005;
  std::uint64_t seed = 1;
  Index t_min = -1;  // -1: problem default (3 for 1D, 25 for 2D)
  Index t_max = -1;  // -1: problem default (74 for 1D, 100 for 2D)
  std::string method = "UPRE";
  std::string t_rule = "rho";
  std::string zeta_rule;  // default: spectrum for 1D, window for 2D
  double tau = 0.1, upsilon = 1.05, omega = -1;
  Index grid = -1;  // -1: 1000 for 1D, 100 for 2D

  void attach(CLI::App* cmd) {
    cmd->add_option("--eta", eta, "noise level");
    cmd->add_option("--seed", seed, "base RNG seed")->required();
    cmd->add_option("--t-min", t_min, "smallest subspace size for the noise rules");
    cmd->add_option("--t-max", t_max, "largest subspace size");
    cmd->add_option("--method", method, "MIN | MDP | UPRE | GCV | WGCV | PMDP");
    cmd->add_option("--t-rule", t_rule, "rho | min | gcvtsvd | fixed:<t>");
    cmd->add_option("--zeta-rule", zeta_rule, "spectrum | window | range:<lo>:<hi>");
    cmd->add_option("--tau", tau, "window factor");
    cmd->add_option("--upsilon", upsilon, "discrepancy safety factor");
    cmd->add_option("--omega", omega, "WGCV weight; negative = (t+1)/m");
    cmd->add_option("--grid", grid, "zeta grid size");
  }

  HybridOptions options(const ProblemFlags& pf) const {
    HybridOptions h;
    h.t_min = t_min >= 0 ? t_min : (pf.is_2d() ? 25 : 3);
    h.t_max = t_max >= 0 ? t_max : (pf.is_2d() ? 100 : 74);
    h.method = method_from_name(method);
    h.tau = tau;
    h.upsilon = upsilon;
    h.omega = omega;
    h.grid_count = grid >= 2 ? grid : (pf.is_2d() ? 100 : 1000);
    if (t_rule == "rho") {
      h.t_rule = TRule::Rho;
    } else if (t_rule == "min") {
      h.t_rule = TRule::Min;
    } else if (t_rule == "gcvtsvd") {
      h.t_rule = TRule::GcvTsvd;
    } else if (t_rule.rfind("fixed:", 0) == 0) {
      h.t_rule = TRule::Fixed;
      h.t_fixed = std::stol(t_rule.substr(6));
    } else {
      throw CLI::ValidationError("--t-rule", "unknown rule: " + t_rule);
    }
    std::string zr = zeta_rule.empty() ? (pf.is_2d() ? "window" : "spectrum") : zeta_rule;
    if (zr == "spectrum") {
      h.zeta_rule = ZetaRule::Spectrum;
    } else if (zr == "window") {
      h.zeta_rule = ZetaRule::Window;
    } else if (zr.rfind("range:", 0) == 0) {
      h.zeta_rule = ZetaRule::Range;
      std::stringstream ss(zr.substr(6));
      std::string lo, hi;
      if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':'))
        throw CLI::ValidationError("--zeta-rule", "expected range:<lo>:<hi>");
      h.zeta_lo = std::stod(lo);
      h.zeta_hi = std::stod(hi);
    } else {
      throw CLI::ValidationError("--zeta-rule", "unknown rule: " + zr);
    }
    return h;
  }
};

std::vector<Index> parse_schedule(const std::string& text) {
  // comma-separated entries: "a", "a:b" (step 1) or "a:s:b"
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long a = 0, s = 1, b = 0;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      a = b = std::stol(item);
    } else {
      const auto c2 = item.find(':', c1 + 1);
      a = std::stol(item.substr(0, c1));
      if (c2 == std::string::npos) {
        b = std::stol(item.substr(c1 + 1));
      } else {
        s = std::stol(item.substr(c1 + 1, c2 - c1 - 1));
        b = std::stol(item.substr(c2 + 1));
      }
    }
    if (s < 1 || b < a) throw CLI::ValidationError("--schedule", "bad entry: " + item);
    for (long t = a; t <= b; t += s) out.push_back(t);
  }
  return out;
}

void write_vector_dns1(const fs::path& path, const Vector& v) {
  Matrix M(v.size(), 1);
  M.col(0) = v;
  write_dns1(path.string(), M);
}

void write_objective_csv(const fs::path& path, const RegSelection& sel) {
  std::ofstream os(path);
  os << "method,zeta,value\n";
  for (Index i = 0; i < sel.grid.size(); ++i)
    os << method_name(sel.method) << ',' << format_double(sel.grid[i]) << ','
       << format_double(sel.values[i]) << "\n";
}

ResultRecord record_from_solution(const ProblemInstance& pi, const NoisySample& ns,
                                  const HybridSolution& sol, int k) {
  ResultRecord r;
  r.problem = pi.name;
  r.method = sol.selection.method;
  r.c = ns.index;
  r.t = sol.t_used;
  r.k = k;
  r.zeta = sol.zeta;
  r.re = relative_error(sol.x, pi.x_ex);
  r.res_proj = sol.residual_proj;
  r.res_full = sol.residual_full;
  r.bsnr_db = bsnr(pi.b_ex, ns.b);
  r.t_opt_rho = sol.t_opt_rho;
  r.t_opt_min = sol.t_opt_min;
  r.t_opt_g = sol.t_opt_g;
  r.flag = sol.flag;
  return r;
}

std::vector<RhoTraceRecord> rho_records(int c, const RhoSequence& rs, Index t_rho, Index t_min_pick,
                                        Index t_g) {
  std::vector<RhoTraceRecord> rows;
  for (Index t = 1; t <= rs.t_achieved(); ++t)
    rows.push_back({c, t, rs.logrho[t - 1] / std::log(10.0), t_rho, t_min_pick, t_g});
  return rows;
}

int cmd_gen(const ProblemFlags& pf, const std::string& outdir) {
  const ProblemInstance pi = pf.make();
  fs::create_directories(outdir);
  const fs::path dir(outdir);
  write_vector_dns1(dir / "x_ex.dns1", pi.x_ex);
  write_vector_dns1(dir / "b_ex.dns1", pi.b_ex);
  if (pi.op->rows() * pi.op->cols() <= 10000000)
    write_dns1((dir / "operator.dns1").string(), to_dense(*pi.op));
  else
    std::cout << "operator too large to densify, skipped operator.dns1\n";
  if (pi.image_n > 0) write_pgm((dir / "x_ex.pgm").string(), pi.x_ex, pi.image_n);
  std::cout << "generated " << pi.name << ": " << pi.op->rows() << " x " << pi.op->cols()
            << " -> " << outdir << "\n";
  return kExitOk;
}

int cmd_solve(const ProblemFlags& pf, const SolveFlags& sf, int sample, bool dump_spectrum,
              const std::string& outdir) {
  const ProblemInstance pi = pf.make();
  const HybridOptions opts = sf.options(pf);
  const NoisySample ns = add_noise(pi, sf.eta, sf.seed, sample).back();
  const DiagonalWeights cov = white_covariance(pi, sf.eta);

  const HybridSolution sol =
      hybrid_solve(pi.op, ns.b, cov, Vector::Zero(pi.op->cols()), DiagonalWeights::ones(pi.op->cols()),
                   ColumnMask::all(pi.op->cols()), opts, &pi.x_ex);

  fs::create_directories(outdir);
  const fs::path dir(outdir);
  write_vector_dns1(dir / "solution.dns1", sol.x);
  if (pi.image_n > 0) write_pgm((dir / "solution.pgm").string(), sol.x, pi.image_n);
  write_results_csv((dir / "results.csv").string(), {record_from_solution(pi, ns, sol, 0)});
  write_rho_csv((dir / "rho.csv").string(),
                rho_records(ns.index, sol.rho_trace, sol.t_opt_rho, sol.t_opt_min, sol.t_opt_g));
  write_objective_csv(dir / "objective.csv", sol.selection);

  if (dump_spectrum) {
    auto [opW, bw] = whiten(pi.op, ns.b, cov);
    const Index t_cap = std::min<Index>(opts.t_max, std::min(pi.op->rows(), pi.op->cols()));
    BidiagFactorization fact = gkb_run(*opW, bw, t_cap, opts.gkb_tol);
    std::ofstream os(dir / "spectrum.csv");
    os << "series,index,value\n";
    if (pi.op->rows() * pi.op->cols() <= 4000000) {
      const SvdTriplet sa = svd(to_dense(*opW));
      const Index keep = std::min<Index>(sa.p(), fact.t());
      for (Index i = 0; i < keep; ++i)
        os << "A," << i + 1 << ',' << format_double(sa.gamma[i]) << "\n";
    }
    for (Index t = 1; t <= fact.t(); t += 10) {
      const SvdTriplet sb = svd(fact.bidiag_matrix(t));
      for (Index i = 0; i < sb.p(); ++i)
        os << "B_" << t << ',' << i + 1 << ',' << format_double(sb.gamma[i]) << "\n";
    }
  }

  std::cout << "t_used=" << sol.t_used << " zeta=" << format_double(sol.zeta)
            << " re=" << format_double(relative_error(sol.x, pi.x_ex))
            << " t_opt_rho=" << sol.t_opt_rho << " t_opt_min=" << sol.t_opt_min
            << " t_opt_g=" << sol.t_opt_g
            << (sol.flag.empty() ? "" : (" flag=" + sol.flag)) << "\n";
  return sol.flag.rfind("error:", 0) == 0 ? kExitPartial : kExitOk;
}

int cmd_irr(const ProblemFlags& pf, const SolveFlags& sf, int sample, int kmax, bool positivity,
            int select_k, const std::string& outdir) {
  const ProblemInstance pi = pf.make();
  const HybridOptions opts = sf.options(pf);
  const NoisySample ns = add_noise(pi, sf.eta, sf.seed, sample).back();
  const DiagonalWeights cov = white_covariance(pi, sf.eta);

  const IrrHistory hist = irr_iterate(pi.op, ns.b, cov, opts, kmax, positivity, &pi.x_ex);

  fs::create_directories(outdir);
  const fs::path dir(outdir);
  std::vector<ResultRecord> rows;
  std::vector<RhoTraceRecord> rho_rows;
  for (const IrrIteration& it : hist.iterations) {
    ResultRecord r;
    r.problem = pi.name;
    r.method = opts.method;
    r.c = ns.index;
    r.t = it.t_used;
    r.k = it.k;
    r.zeta = it.zeta;
    r.re = it.re;
    r.bsnr_db = bsnr(pi.b_ex, ns.b);
    r.flag = it.flag;
    rows.push_back(std::move(r));
    // rho trace of step k, keyed by k in the sample column
    auto tr = rho_records(it.k, it.rho_trace, 0, 0, 0);
    rho_rows.insert(rho_rows.end(), tr.begin(), tr.end());
  }
  write_results_csv((dir / "results.csv").string(), rows);
  write_rho_csv((dir / "rho_by_k.csv").string(), rho_rows);

  const int last = int(hist.iterations.size()) - 1;
  const int pick = select_k >= 0 ? std::min(select_k, last) : last;
  const Vector& x = hist.iterations[std::size_t(pick)].x;
  write_vector_dns1(dir / "solution.dns1", x);
  if (pi.image_n > 0) write_pgm((dir / "solution.pgm").string(), x, pi.image_n);

  for (const IrrIteration& it : hist.iterations)
    std::cout << "k=" << it.k << " t=" << it.t_used << " zeta=" << format_double(it.zeta)
              << " re=" << format_double(it.re)
              << (it.flag.empty() ? "" : (" flag=" + it.flag)) << "\n";
  if (hist.converged_by_freeze) std::cout << "converged: all coordinates frozen\n";
  std::cout << "wrote solution of k=" << pick << "\n";
  return kExitOk;
}

int cmd_sweep(const ProblemFlags& pf, const SolveFlags& sf, int samples,
              const std::string& methods_text, const std::string& schedule_text, int threads,
              bool resume, const std::string& outdir) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.problem = pf.name;
  cfg.problem_params = pf.params();
  cfg.eta = sf.eta;
  cfg.samples = samples;
  cfg.base_seed = sf.seed;
  cfg.seed_set = true;
  cfg.hybrid = sf.options(pf);
  cfg.threads = threads;
  cfg.resume = resume;
  cfg.outdir = outdir;

  std::stringstream ms(methods_text);
  std::string tok;
  while (std::getline(ms, tok, ','))
    if (!tok.empty()) cfg.methods.push_back(method_from_name(tok));

  cfg.t_schedule = schedule_text.empty()
                       ? (pf.is_2d() ? parse_schedule("5:5:100") : default_schedule_1d())
                       : parse_schedule(schedule_text);

  const ProblemInstance pi = pf.make();
  validate(cfg);

  fs::create_directories(outdir);
  const fs::path dir(outdir);
  const std::string results_path = (dir / "results.csv").string();

  std::vector<ResultRecord> existing;
  if (resume && fs::exists(results_path)) existing = read_results_csv(results_path);

  std::vector<RhoTraceRecord> rho_rows;
  const std::vector<ResultRecord> rows =
      run_sweep(cfg, pi, existing.empty() ? nullptr : &existing, &rho_rows);

  write_results_csv(results_path, rows);
  if (!rho_rows.empty()) write_rho_csv((dir / "rho_trace.csv").string(), rho_rows);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest((dir / "manifest.json").string(), cfg, wall, rows.size());

  int failures = 0;
  for (const auto& r : rows) failures += r.flag.rfind("error:", 0) == 0;
  std::cout << "wrote " << rows.size() << " rows to " << results_path << " (" << failures
            << " failed rows, " << format_double(wall) << " s)\n";
  return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_summarize(const std::string& in_path, const std::string& out_path) {
  const auto rows = read_results_csv(in_path);
  const auto summary = table_summarize(rows);
  write_summary_csv(out_path, summary);
  std::cout << "method  avg_t_rho  re@t_bar   min_re     avg_min_re  avg_t@min\n";
  for (const auto& s : summary) {
    std::printf("%-7s %-10.2f %-10.4f %-10.4f %-11.4f %-.1f\n", method_name(s.method),
                s.avg_t_opt_rho, s.re_at_t_bar, s.min_re, s.avg_min_re, s.avg_t_at_min);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix-free hybrid Tikhonov regularization toolkit"};
  app.require_subcommand(1);

  ProblemFlags pf_gen, pf_solve, pf_irr, pf_sweep;
  SolveFlags sf_solve, sf_irr, sf_sweep;
  std::string outdir = "out";
  int sample = 1, kmax = 4, select_k = -1, samples = 50, threads = 1;
  bool positivity = false, dump_spectrum = false, resume = false;
  std::string methods_text = "MIN,MDP,UPRE,GCV,WGCV,PMDP", schedule_text, in_path, out_path,
              kind_text = "re_vs_t";

  CLI::App* gen = app.add_subcommand("gen", "generate a problem and export it");
  pf_gen.attach(gen);
  gen->add_option("--out", outdir, "output directory");

  CLI::App* solve = app.add_subcommand("solve", "single hybrid solve on one noisy sample");
  pf_solve.attach(solve);
  sf_solve.attach(solve);
  solve->add_option("--sample", sample, "sample index c");
  solve->add_flag("--dump-spectrum", dump_spectrum, "write spectrum.csv overlays");
  solve->add_option("--out", outdir, "output directory");

  CLI::App* irr = app.add_subcommand("irr", "iteratively reweighted solve");
  pf_irr.attach(irr);
  sf_irr.attach(irr);
  irr->add_option("--sample", sample, "sample index c");
  irr->add_option("--kmax", kmax, "number of outer iterations");
  irr->add_flag("--positivity", positivity, "clamp iterates at zero");
  irr->add_option("--select-k", select_k, "emit the solution of step k (default: last)");
  irr->add_option("--out", outdir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "multi-sample, multi-t experiment");
  pf_sweep.attach(sweep);
  sf_sweep.attach(sweep);
  sweep->add_option("--samples", samples, "noise sample count");
  sweep->add_option("--methods", methods_text, "comma-separated method list");
  sweep->add_option("--schedule", schedule_text, "t schedule, e.g. 3:20,24:5:74");
  sweep->add_option("--threads", threads, "sample-level workers");
  sweep->add_flag("--resume", resume, "keep completed rows from a previous run");
  sweep->add_option("--out", outdir, "output directory");

  CLI::App* summarize = app.add_subcommand("summarize", "table summary of a sweep csv");
  summarize->add_option("--in", in_path, "results.csv path")->required();
  summarize->add_option("--out", out_path, "summary csv path");

  CLI::App* plot = app.add_subcommand("plot", "render a csv to svg");
  plot->add_option("--in", in_path, "input csv")->required();
  plot->add_option("--kind", kind_text, "re_vs_t | rho | spectrum | objective");
  plot->add_option("--out", out_path, "output svg")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(pf_gen, outdir);
    if (solve->parsed()) return cmd_solve(pf_solve, sf_solve, sample, dump_spectrum, outdir);
    if (irr->parsed()) return cmd_irr(pf_irr, sf_irr, sample, kmax, positivity, select_k, outdir);
    if (sweep->parsed())
      return cmd_sweep(pf_sweep, sf_sweep, samples, methods_text, schedule_text, threads, resume,
                       outdir);
    if (summarize->parsed())
      return cmd_summarize(in_path, out_path.empty() ? "summary.csv" : out_path);
    if (plot->parsed()) {
      emit_plot(in_path, plot_kind_from_name(kind_text), out_path);
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitConfig;
}
