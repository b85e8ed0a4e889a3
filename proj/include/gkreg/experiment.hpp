#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gkreg/problems.hpp"
#include "gkreg/solver.hpp"
#include "gkreg/types.hpp"

namespace gkreg {

// Full description of a sweep run; validated before any compute and
// serialized verbatim into the run manifest.
struct ExperimentConfig {
  std::string problem;                    // phillips | gravity | blur2d | tomo
  std::map<std::string, double> problem_params;
  double eta = 0.005;
  int samples = 50;
  std::uint64_t base_seed = 0;
  bool seed_set = false;
  std::vector<Method> methods;
  std::vector<Index> t_schedule;
  HybridOptions hybrid;
  int irr_kmax = 4;
  bool positivity = false;
  std::string outdir = ".";
  int threads = 1;
  bool resume = false;
};

void validate(const ExperimentConfig& cfg);

ProblemInstance make_problem(const std::string& name,
                             const std::map<std::string, double>& params);

// The 1D sweep schedule 3..20 then 24:5:74.
std::vector<Index> default_schedule_1d();

// One row per (sample, t, method, irr step).
struct ResultRecord {
  std::string problem;
  Method method = Method::Upre;
  int c = 0;
  Index t = 0;
  int k = 0;
  double zeta = 0;
  double re = -1;
  double res_proj = 0;
  double res_full = 0;
  double bsnr_db = 0;
  Index t_opt_rho = 0;
  Index t_opt_min = 0;
  Index t_opt_g = 0;
  std::string flag;
};

// Rho trace rows (t, rho, markers) for the plot command, one block per sample.
struct RhoTraceRecord {
  int c = 0;
  Index t = 0;
  double rho_log10 = 0;
  Index t_opt_rho = 0;
  Index t_opt_min = 0;
  Index t_opt_g = 0;
};

// Runs every method at every scheduled t for every noise sample, reusing one
// factorization per sample. Rows come back canonically ordered by
// (c, t, method, k); failures are recorded per row and do not stop the sweep.
// existing rows (resume) are kept and their keys skipped; fully covered
// samples are not recomputed. rho_out, when given, receives the noise-
// revealing traces of the computed samples.
std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg, const ProblemInstance& pi,
                                    const std::vector<ResultRecord>* existing = nullptr,
                                    std::vector<RhoTraceRecord>* rho_out = nullptr);

extern const char* kResultHeader;

void write_results_csv(const std::string& path, const std::vector<ResultRecord>& rows);
std::vector<ResultRecord> read_results_csv(const std::string& path);

void write_rho_csv(const std::string& path, const std::vector<RhoTraceRecord>& rows);

// Per-method summary in the style of the usual two table blocks: the mean
// error at the rounded mean t_opt-rho, and the best error over all t with
// the mean t attaining each sample's minimum.
struct MethodSummary {
  Method method = Method::Upre;
  double avg_t_opt_rho = 0;
  Index t_bar = 0;
  double re_at_t_bar = 0;
  double min_re = 0;           // minimum over all samples and all t
  double avg_min_re = 0;       // mean over samples of each sample's min over t
  double avg_t_at_min = 0;
};
std::vector<MethodSummary> table_summarize(const std::vector<ResultRecord>& rows);
void write_summary_csv(const std::string& path, const std::vector<MethodSummary>& summary);

// JSON manifest with the verbatim config, seeds, source revision and wall
// time. Timing lives here so result CSVs stay bit-reproducible.
void write_manifest(const std::string& path, const ExperimentConfig& cfg, double wall_seconds,
                    std::size_t rows_written);

std::string format_double(double v);

}  // namespace gkreg
