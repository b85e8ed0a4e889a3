#include "gkreg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gkreg/svdcore.hpp"

namespace gkreg {

void validate(const ExperimentConfig& cfg) {
  if (cfg.problem.empty()) throw std::invalid_argument("config: problem name required");
  if (!(cfg.eta >= 0)) throw std::invalid_argument("config: eta must be >= 0");
  if (cfg.samples < 1) throw std::invalid_argument("config: samples must be >= 1");
  if (!cfg.seed_set) throw std::invalid_argument("config: --seed is required");
  if (cfg.methods.empty()) throw std::invalid_argument("config: empty method list");
  if (cfg.t_schedule.empty()) throw std::invalid_argument("config: empty t schedule");
  for (std::size_t i = 1; i < cfg.t_schedule.size(); ++i)
    if (cfg.t_schedule[i] <= cfg.t_schedule[i - 1])
      throw std::invalid_argument("config: t schedule must be strictly increasing");
  if (!(cfg.hybrid.t_min >= 1 && cfg.hybrid.t_max > cfg.hybrid.t_min))
    throw std::invalid_argument("config: need 1 <= t_min < t_max");
  if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

ProblemInstance make_problem(const std::string& name,
                             const std::map<std::string, double>& p) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = p.find(key);
    return it != p.end() ? it->second : fallback;
  };
  if (name == "phillips") return phillips(Index(get("m", 152)), Index(get("n", 304)));
  if (name == "gravity")
    return gravity(Index(get("m", 152)), Index(get("n", 304)), get("d", 0.75));
  if (name == "blur2d")
    return blur2d(Index(get("N", 64)), get("sigma", 2.5), Index(get("halfwidth", 10)));
  if (name == "tomo")
    return tomo(Index(get("N", 64)), Index(get("angles", 30)), Index(get("detectors", 64)));
  throw std::invalid_argument("unknown problem: " + name);
}

std::vector<Index> default_schedule_1d() {
  std::vector<Index> t;
  for (Index i = 3; i <= 20; ++i) t.push_back(i);
  for (Index i = 24; i <= 74; i += 5) t.push_back(i);
  return t;
}

const char* kResultHeader =
    "problem,method,c,t,k,zeta,re,res_proj,res_full,bsnr,t_opt_rho,t_opt_min,t_opt_g,flag";

std::string format_double(double v) {
  // shortest representation that parses back to the same double
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

struct RowKey {
  int c;
  Index t;
  int method;
  int k;
  auto operator<=>(const RowKey&) const = default;
};

RowKey key_of(const ResultRecord& r) { return {r.c, r.t, int(r.method), r.k}; }

void sort_canonical(std::vector<ResultRecord>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRecord& a, const ResultRecord& b) { return key_of(a) < key_of(b); });
}

// All rows of one sample: one factorization, truncated to each scheduled t.
std::vector<ResultRecord> sweep_sample(const ExperimentConfig& cfg, const ProblemInstance& pi,
                                       const NoisySample& ns, const std::set<RowKey>& skip,
                                       std::vector<RhoTraceRecord>* rho_rows) {
  std::vector<ResultRecord> rows;
  const Index m = pi.op->rows();
  const DiagonalWeights cov = white_covariance(pi, cfg.eta);
  auto [opW, bw] = whiten(pi.op, ns.b, cov);
  const double sample_bsnr = bsnr(pi.b_ex, ns.b);

  const Index t_top = std::min<Index>(cfg.t_schedule.back(),
                                      std::min(pi.op->rows(), pi.op->cols()));
  BidiagFactorization fact = gkb_run(*opW, bw, t_top, cfg.hybrid.gkb_tol);
  const RhoSequence rs = rho(fact, cfg.hybrid.t_min);
  const Index t_rho = t_opt_rho(rs).t;
  const Index t_min_pick = t_opt_min(rs).t;

  const SvdTriplet svd_top = svd(fact.bidiag_matrix(fact.t()));
  const SpectralData sd_top = project_spectrum(svd_top, fact.beta1(), m);
  const Index t_g = fact.t() >= 2 ? gcv_tsvd(sd_top.bhat, fact.t()).t_opt : 1;

  if (rho_rows)
    for (Index t = 1; t <= rs.t_achieved(); ++t)
      rho_rows->push_back({ns.index, t, rs.logrho[t - 1] / std::log(10.0), t_rho, t_min_pick, t_g});

  const double nx = pi.x_ex.norm();

  for (Index t : cfg.t_schedule) {
    if (t > fact.t()) break;
    bool all_skipped = true;
    for (Method meth : cfg.methods)
      if (!skip.count({ns.index, t, int(meth), 0})) all_skipped = false;
    if (all_skipped) continue;

    const SvdTriplet svd_b = t == fact.t() ? svd_top : svd(fact.bidiag_matrix(t));
    const SpectralData sd = t == fact.t() ? sd_top : project_spectrum(svd_b, fact.beta1(), m);
    const Matrix G_t = fact.G().leftCols(t);
    const Vector rhs = projected_rhs(fact).head(t + 1);

    for (Method meth : cfg.methods) {
      if (skip.count({ns.index, t, int(meth), 0})) continue;
      ResultRecord row;
      row.problem = pi.name;
      row.method = meth;
      row.c = ns.index;
      row.t = t;
      row.k = 0;
      row.bsnr_db = sample_bsnr;
      row.t_opt_rho = t_rho;
      row.t_opt_min = t_min_pick;
      row.t_opt_g = t_g;
      try {
        double lo, hi;
        if (meth == Method::Min && cfg.hybrid.zeta_rule == ZetaRule::Window) {
          std::tie(lo, hi) = min_zeta_range_2d();
        } else if (cfg.hybrid.zeta_rule == ZetaRule::Window) {
          Index t_star = std::clamp<Index>(std::max(t_rho, t_g), 1, t);
          const ZetaWindow w = zeta_window(sd.gamma, t_star, cfg.hybrid.tau);
          lo = w.lo;
          hi = w.hi;
          if (w.widened) row.flag = "window_widened";
        } else {
          hi = sd.gamma[0];
          lo = std::max(1e-14 * hi, sd.gamma[t - 1]);
          if (!(lo < hi)) lo = 1e-14 * hi;
        }
        const Vector grid = zeta_grid(lo, hi, cfg.hybrid.grid_count);

        SelectOptions sopt;
        sopt.omega = cfg.hybrid.omega;
        sopt.upsilon = cfg.hybrid.upsilon;
        sopt.upre_mode = cfg.hybrid.upre_mode;
        if (meth == Method::Min) {
          sopt.re_eval = [&](const VectorRef& zs) {
            Matrix W(sd.t, zs.size());
            for (Index j = 0; j < zs.size(); ++j) {
              const Vector phi = filter_factors(sd.gamma, zs[j]);
              W.col(j) = svd_b.V * phi.cwiseProduct(sd.bhat.head(sd.t)).cwiseQuotient(sd.gamma);
            }
            const Matrix X = G_t * W;
            Vector res(zs.size());
            for (Index j = 0; j < zs.size(); ++j) res[j] = (X.col(j) - pi.x_ex).norm() / nx;
            return res;
          };
        }
        const RegSelection sel = select_parameter(meth, sd, grid, sopt);
        const FilteredSolution fs = tikhonov_solve(svd_b, rhs, sel.zeta_opt);
        const Vector x = G_t * fs.x;

        row.zeta = sel.zeta_opt;
        row.re = relative_error(x, pi.x_ex);
        row.res_proj = (fact.bidiag_matrix(t) * fs.x - rhs).norm();
        row.res_full = (opW->apply(x) - bw).norm();
        if (row.flag.empty()) row.flag = sel.flag;
      } catch (const std::exception& e) {
        row.flag = std::string("error:") + e.what();
        row.re = -1;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg, const ProblemInstance& pi,
                                    const std::vector<ResultRecord>* existing,
                                    std::vector<RhoTraceRecord>* rho_out) {
  validate(cfg);
  std::set<RowKey> skip;
  std::vector<ResultRecord> merged;
  if (existing) {
    for (const ResultRecord& r : *existing) skip.insert(key_of(r));
    merged = *existing;
  }

  const std::vector<NoisySample> samples = add_noise(pi, cfg.eta, cfg.base_seed, cfg.samples);
  const Index min_mn = std::min(pi.op->rows(), pi.op->cols());
  std::vector<std::vector<ResultRecord>> per_sample(samples.size());
  std::vector<std::vector<RhoTraceRecord>> per_sample_rho(samples.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(cfg.threads, int(samples.size())));

  auto fully_covered = [&](int c) {
    for (Index t : cfg.t_schedule) {
      if (t > min_mn) break;
      for (Method meth : cfg.methods)
        if (!skip.count({c, t, int(meth), 0})) return false;
    }
    return true;
  };

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= samples.size()) return;
      if (fully_covered(samples[i].index)) continue;
      per_sample[i] = sweep_sample(cfg, pi, samples[i], skip,
                                   rho_out ? &per_sample_rho[i] : nullptr);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (auto& rows : per_sample)
    merged.insert(merged.end(), std::make_move_iterator(rows.begin()),
                  std::make_move_iterator(rows.end()));
  sort_canonical(merged);
  if (rho_out)
    for (auto& rows : per_sample_rho)
      rho_out->insert(rho_out->end(), rows.begin(), rows.end());
  return merged;
}

void write_results_csv(const std::string& path, const std::vector<ResultRecord>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << kResultHeader << "\n";
  for (const ResultRecord& r : rows) {
    os << r.problem << ',' << method_name(r.method) << ',' << r.c << ',' << r.t << ',' << r.k
       << ',' << format_double(r.zeta) << ',' << format_double(r.re) << ','
       << format_double(r.res_proj) << ',' << format_double(r.res_full) << ','
       << format_double(r.bsnr_db) << ',' << r.t_opt_rho << ',' << r.t_opt_min << ','
       << r.t_opt_g << ',' << r.flag << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty csv: " + path);
  if (line != kResultHeader) throw std::runtime_error("unexpected csv header in " + path);
  std::vector<ResultRecord> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 14) throw std::runtime_error("malformed csv row in " + path);
    ResultRecord r;
    r.problem = f[0];
    r.method = method_from_name(f[1]);
    r.c = std::stoi(f[2]);
    r.t = std::stol(f[3]);
    r.k = std::stoi(f[4]);
    r.zeta = std::stod(f[5]);
    r.re = std::stod(f[6]);
    r.res_proj = std::stod(f[7]);
    r.res_full = std::stod(f[8]);
    r.bsnr_db = std::stod(f[9]);
    r.t_opt_rho = std::stol(f[10]);
    r.t_opt_min = std::stol(f[11]);
    r.t_opt_g = std::stol(f[12]);
    r.flag = f[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rho_csv(const std::string& path, const std::vector<RhoTraceRecord>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "c,t,rho_log10,t_opt_rho,t_opt_min,t_opt_g\n";
  for (const auto& r : rows)
    os << r.c << ',' << r.t << ',' << format_double(r.rho_log10) << ',' << r.t_opt_rho << ','
       << r.t_opt_min << ',' << r.t_opt_g << "\n";
}

std::vector<MethodSummary> table_summarize(const std::vector<ResultRecord>& rows) {
  std::vector<ResultRecord> valid;
  for (const auto& r : rows)
    if (r.k == 0 && r.re >= 0) valid.push_back(r);
  if (valid.empty()) throw std::invalid_argument("table_summarize: no usable rows");

  std::set<Method> methods;
  std::map<int, Index> topt_by_sample;
  std::set<Index> ts;
  for (const auto& r : valid) {
    methods.insert(r.method);
    topt_by_sample[r.c] = r.t_opt_rho;
    ts.insert(r.t);
  }
  double avg_topt = 0;
  for (const auto& [c, t] : topt_by_sample) avg_topt += double(t);
  avg_topt /= double(topt_by_sample.size());
  // snap to the nearest scheduled t (earlier wins ties)
  Index t_bar = *ts.begin();
  for (Index t : ts)
    if (std::abs(double(t) - avg_topt) < std::abs(double(t_bar) - avg_topt)) t_bar = t;

  std::vector<MethodSummary> out;
  for (Method meth : methods) {
    MethodSummary s;
    s.method = meth;
    s.avg_t_opt_rho = avg_topt;
    s.t_bar = t_bar;
    double re_sum = 0;
    int re_n = 0;
    std::map<int, std::pair<double, Index>> best;  // c -> (min re, earliest argmin t)
    s.min_re = std::numeric_limits<double>::infinity();
    for (const auto& r : valid) {
      if (r.method != meth) continue;
      if (r.t == t_bar) {
        re_sum += r.re;
        ++re_n;
      }
      auto it = best.find(r.c);
      if (it == best.end() || r.re < it->second.first) best[r.c] = {r.re, r.t};
      s.min_re = std::min(s.min_re, r.re);
    }
    s.re_at_t_bar = re_n ? re_sum / re_n : -1;
    double mr = 0, mt = 0;
    for (const auto& [c, p] : best) {
      mr += p.first;
      mt += double(p.second);
    }
    s.avg_min_re = best.empty() ? -1 : mr / double(best.size());
    s.avg_t_at_min = best.empty() ? 0 : mt / double(best.size());
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(const std::string& path, const std::vector<MethodSummary>& summary) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "method,avg_t_opt_rho,t_bar,re_at_t_bar,min_re,avg_min_re,avg_t_at_min\n";
  for (const auto& s : summary)
    os << method_name(s.method) << ',' << format_double(s.avg_t_opt_rho) << ',' << s.t_bar << ','
       << format_double(s.re_at_t_bar) << ',' << format_double(s.min_re) << ','
       << format_double(s.avg_min_re) << ',' << format_double(s.avg_t_at_min) << "\n";
}

namespace {

std::string git_describe() {
  FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!p) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  ::pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

}  // namespace

void write_manifest(const std::string& path, const ExperimentConfig& cfg, double wall_seconds,
                    std::size_t rows_written) {
  nlohmann::json j;
  j["problem"] = cfg.problem;
  j["problem_params"] = cfg.problem_params;
  j["eta"] = cfg.eta;
  j["samples"] = cfg.samples;
  j["base_seed"] = cfg.base_seed;
  std::vector<std::string> methods;
  for (Method m : cfg.methods) methods.emplace_back(method_name(m));
  j["methods"] = methods;
  j["t_schedule"] = cfg.t_schedule;
  j["hybrid"] = {{"t_min", cfg.hybrid.t_min},
                 {"t_max", cfg.hybrid.t_max},
                 {"tau", cfg.hybrid.tau},
                 {"upsilon", cfg.hybrid.upsilon},
                 {"omega", cfg.hybrid.omega},
                 {"grid_count", cfg.hybrid.grid_count},
                 {"gkb_tol", cfg.hybrid.gkb_tol},
                 {"zeta_rule", int(cfg.hybrid.zeta_rule)},
                 {"t_rule", int(cfg.hybrid.t_rule)}};
  j["irr_kmax"] = cfg.irr_kmax;
  j["positivity"] = cfg.positivity;
  j["threads"] = cfg.threads;
  j["revision"] = git_describe();
  j["wall_seconds"] = wall_seconds;
  j["rows_written"] = rows_written;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << j.dump(2) << "\n";
}

}  // namespace gkreg
