#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/filters.hpp"
#include "rwl1df/solvers.hpp"
#include "rwl1df/synthetic.hpp"
#include "rwl1df/video.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rwl1df {

enum class Algorithm { bpdn, rwl1, bpdn_df, rwl1_df, kalman };

std::string_view algorithm_tag(Algorithm a);
Algorithm parse_algorithm(std::string_view tag);
std::vector<Algorithm> parse_algorithm_list(std::string_view comma_list);

enum class ExperimentKind { synthetic, sweep_m, sweep_p, video };

std::string_view experiment_tag(ExperimentKind k);

/// ||x_true - x_est||^2 / ||x_true||^2. Throws UndefinedMetric if x_true = 0.
double rmse(const Vector& x_true, const Vector& x_est);

/// Number of trailing steps averaged for the steady-state value (20%).
std::size_t steady_state_window(std::size_t steps);
double steady_state(const std::vector<double>& series);

struct TrialRecord {
  int trial_id = 0;
  Algorithm algorithm = Algorithm::bpdn;
  std::vector<double> rmse;
  double steady_state_rmse = 0.0;
  double wall_time = 0.0;
  /// Filter steps with an inner solve that failed its KKT check.
  int solver_warnings = 0;
  /// Non-empty if the filter threw; the series then stops early.
  std::string error;
};

/// Parameters left unset take the per-experiment defaults (some
/// of which depend on p, S and the noise variance).
struct ParamOverrides {
  std::optional<double> bpdn_lambda;
  std::optional<double> rwl1_lambda0, rwl1_tau, rwl1_beta, rwl1_eta;
  std::optional<int> rwl1_em_iters;
  std::optional<double> bpdndf_gamma, bpdndf_kappa;
  std::optional<int> bpdndf_q;
  std::optional<double> rwl1df_lambda0, rwl1df_tau, rwl1df_beta, rwl1df_eta;
  std::optional<int> rwl1df_em_iters;
  std::optional<double> kalman_process_var, kalman_init_var;
};

struct ResolvedParams {
  double bpdn_lambda = 0.0;
  LsmParams rwl1;
  BpdnDfParams bpdndf;
  LsmParams rwl1df;
  double kalman_process_var = 0.0;
  double kalman_init_var = 0.0;
};

ResolvedParams resolve_synthetic_params(const ParamOverrides& ov, const SyntheticConfig& sc);
ResolvedParams resolve_video_params(const ParamOverrides& ov);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::synthetic;
  ParamOverrides params;
  SolverSettings solver;
  SyntheticConfig synthetic;
  VideoConfig video;
  std::vector<Index> m_values{50, 60, 70, 90, 110};
  std::vector<Index> p_values{0, 1, 2, 3, 4, 5};
  int trials = 40;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::vector<Algorithm> algos;
  int threads = 1;

  /// Enabled algorithms (kind-specific default when `algos` is empty).
  std::vector<Algorithm> algorithms() const;
  void validate() const;
};

/// Defaults for a subcommand (video runs one trial of the four sparse filters).
ExperimentConfig default_config(ExperimentKind kind);

/// One ground-truth sequence, shared measurements, one record per algorithm.
std::vector<TrialRecord> run_synthetic_trial(const ExperimentConfig& cfg, int trial_id);

/// All trials, run on cfg.threads workers, sorted by (trial, algorithm).
std::vector<TrialRecord> run_synthetic(const ExperimentConfig& cfg);

struct SweepRow {
  double axis = 0.0;
  Algorithm algorithm = Algorithm::bpdn;
  double mean_rmse = 0.0;
  double stderr_rmse = 0.0;
  int trials = 0;
  int failed = 0;
};

enum class SweepAxis { m, p };

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                            const std::vector<Index>& values);

/// Aggregates steady-state rMSE per algorithm (mean and standard error).
std::vector<SweepRow> aggregate_steady_state(const std::vector<TrialRecord>& records,
                                             double axis_value);

struct VideoRun {
  std::vector<TrialRecord> records;
  Index signal_dim = 0;
  Index measurements = 0;
};

VideoRun run_video_experiment(const ExperimentConfig& cfg);
/// Same, on frames already in memory.
VideoRun run_video_experiment(const ExperimentConfig& cfg, const std::vector<Matrix>& frames);

/// `trial,t,algorithm,rmse` (t is 1-based).
void write_timeseries_csv(std::ostream& out, const std::vector<TrialRecord>& records);
/// `axis,algorithm,mean_rmse,stderr`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct SeriesStats {
  double mean = 0.0;
  double median = 0.0;
  double stderr_mean = 0.0;
};

SeriesStats series_stats(std::vector<double> values);

/// Per-algorithm mean/median/steady-state table (and rMSE histograms when
/// `histogram` is set).
void write_summary(std::ostream& out, const std::string& title,
                   const std::vector<TrialRecord>& records, bool histogram);

/// Mean rMSE per time step across trials for one algorithm.
std::vector<double> mean_curve(const std::vector<TrialRecord>& records, Algorithm a);

}  // namespace rwl1df
