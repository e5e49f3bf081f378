#include "rwl1df/harness.hpp"

#include "rwl1df/kalman.hpp"
#include "rwl1df/noiselet.hpp"
#include "rwl1df/wavelet.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace rwl1df {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// handled by exactly one worker, so results written per index are
// independent of scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers =
      static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(count))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct SyntheticTrialData {
  GroundTruthSequence truth;
  std::vector<MeasurementFrame> frames;
};

SyntheticTrialData make_synthetic_trial(const SyntheticConfig& sc, std::uint64_t seed,
                                        int trial_id) {
  Rng rng = substream(seed, static_cast<std::uint64_t>(trial_id));
  SyntheticTrialData data;
  data.truth = generate_sequence(sc, rng);
  data.frames.reserve(data.truth.states.size());
  for (const Vector& x : data.truth.states) {
    data.frames.push_back(measure_state(x, sc.m, sc.noise_var, rng));
  }
  return data;
}

// Shared driver: `estimate(t)` returns the signal-domain estimate at step t.
template <class Estimator>
TrialRecord run_series(int trial_id, Algorithm algo, const std::vector<Vector>& truth,
                       Estimator&& estimate) {
  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.algorithm = algo;
  const auto start = std::chrono::steady_clock::now();
  try {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      bool converged = true;
      const Vector x_hat = estimate(t, converged);
      if (!converged) ++rec.solver_warnings;
      rec.rmse.push_back(rmse(truth[t], x_hat));
    }
    rec.steady_state_rmse = steady_state(rec.rmse);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.steady_state_rmse = kNaN;
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

TrialRecord run_synthetic_algorithm(Algorithm algo, const SyntheticTrialData& data,
                                    const ResolvedParams& rp, const SolverSettings& solver,
                                    const SyntheticConfig& sc, int trial_id) {
  const LinearOperator synthesis = LinearOperator::identity(sc.n);
  const auto& frames = data.frames;
  const auto& dynamics = data.truth.dynamics;

  switch (algo) {
    case Algorithm::bpdn:
      return run_series(trial_id, algo, data.truth.states, [&](std::size_t t, bool& ok) {
        const StepOutcome out = bpdn_step(frames[t], synthesis, rp.bpdn_lambda, solver);
        ok = out.converged;
        return out.z;
      });
    case Algorithm::rwl1:
      return run_series(trial_id, algo, data.truth.states, [&](std::size_t t, bool& ok) {
        const StepOutcome out = rwl1_static(frames[t], synthesis, rp.rwl1, solver);
        ok = out.converged;
        return out.z;
      });
    case Algorithm::bpdn_df: {
      Vector prev = Vector::Zero(sc.n);
      return run_series(trial_id, algo, data.truth.states, [&](std::size_t t, bool& ok) {
        BpdnDfParams p = rp.bpdndf;
        Vector prediction = Vector::Zero(sc.n);
        if (t == 0) {
          p.kappa = 0.0;  // no prediction exists before the first frame
        } else {
          prediction = dynamics[t - 1].apply(prev);
        }
        const StepOutcome out = bpdn_df_step(frames[t], synthesis, prediction, p, solver,
                                             prediction);
        ok = out.converged;
        prev = out.z;
        return out.z;
      });
    }
    case Algorithm::rwl1_df: {
      FilterState state{Vector::Zero(sc.n), WeightVector(), 0};
      return run_series(trial_id, algo, data.truth.states, [&](std::size_t t, bool& ok) {
        if (t == 0) {
          const StepOutcome out = rwl1_df_em(frames[t], synthesis, Vector::Zero(sc.n),
                                             Vector::Zero(sc.n), rp.rwl1df, solver);
          state = FilterState{out.z, out.weights, 1, out.em_rounds, out.converged};
        } else {
          const PermutationDynamics& f = dynamics[t - 1];
          const DynamicsModel model{[&f](const Vector& x) { return f.apply(x); },
                                    "signed permutation"};
          state = rwl1_df_step(frames[t], synthesis, state, model, rp.rwl1df, solver);
        }
        ok = state.converged;
        return state.z_prev;
      });
    }
    case Algorithm::kalman: {
      KalmanState st;
      st.mean = Vector::Zero(sc.n);
      st.cov = rp.kalman_init_var * Matrix::Identity(sc.n, sc.n);
      st.meas_cov = sc.noise_var * Matrix::Identity(sc.m, sc.m);
      return run_series(trial_id, algo, data.truth.states, [&](std::size_t t, bool& ok) {
        ok = true;
        if (t == 0) {
          st.dynamics = Matrix::Identity(sc.n, sc.n);
          st.process_cov = Matrix::Zero(sc.n, sc.n);
        } else {
          st.dynamics = dynamics[t - 1].matrix();
          st.process_cov = rp.kalman_process_var * Matrix::Identity(sc.n, sc.n);
        }
        st = kalman_step(frames[t], st);
        return st.mean;
      });
    }
  }
  throw InvalidParameter("unknown algorithm");
}

void sort_records(std::vector<TrialRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.trial_id != b.trial_id) return a.trial_id < b.trial_id;
    return static_cast<int>(a.algorithm) < static_cast<int>(b.algorithm);
  });
}

}  // namespace

std::string_view algorithm_tag(Algorithm a) {
  switch (a) {
    case Algorithm::bpdn: return "bpdn";
    case Algorithm::rwl1: return "rwl1";
    case Algorithm::bpdn_df: return "bpdndf";
    case Algorithm::rwl1_df: return "rwl1df";
    case Algorithm::kalman: return "kalman";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view tag) {
  for (Algorithm a : {Algorithm::bpdn, Algorithm::rwl1, Algorithm::bpdn_df, Algorithm::rwl1_df,
                      Algorithm::kalman}) {
    if (algorithm_tag(a) == tag) return a;
  }
  throw InvalidConfig("unknown algorithm `" + std::string(tag) +
                      "` (expected bpdn, rwl1, bpdndf, rwl1df or kalman)");
}

std::vector<Algorithm> parse_algorithm_list(std::string_view comma_list) {
  std::vector<Algorithm> out;
  std::size_t pos = 0;
  while (pos <= comma_list.size()) {
    const std::size_t comma = std::min(comma_list.find(',', pos), comma_list.size());
    std::string_view item = comma_list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const Algorithm a = parse_algorithm(item);
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw InvalidConfig("empty algorithm list");
  std::sort(out.begin(), out.end(),
            [](Algorithm a, Algorithm b) { return static_cast<int>(a) < static_cast<int>(b); });
  return out;
}

std::string_view experiment_tag(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::synthetic: return "synthetic";
    case ExperimentKind::sweep_m: return "sweep-m";
    case ExperimentKind::sweep_p: return "sweep-p";
    case ExperimentKind::video: return "video";
  }
  return "?";
}

double rmse(const Vector& x_true, const Vector& x_est) {
  if (x_true.size() != x_est.size()) {
    throw InvalidDimension("rmse: lengths differ (" + std::to_string(x_true.size()) + " vs " +
                           std::to_string(x_est.size()) + ")");
  }
  const double denom = x_true.squaredNorm();
  if (!(denom > 0.0)) throw UndefinedMetric("rmse: true signal is zero");
  return (x_true - x_est).squaredNorm() / denom;
}

std::size_t steady_state_window(std::size_t steps) {
  return std::max<std::size_t>(1, (steps + 4) / 5);
}

double steady_state(const std::vector<double>& series) {
  if (series.empty()) return kNaN;
  const std::size_t w = std::min(series.size(), steady_state_window(series.size()));
  double sum = 0.0;
  for (std::size_t i = series.size() - w; i < series.size(); ++i) sum += series[i];
  return sum / static_cast<double>(w);
}

ResolvedParams resolve_synthetic_params(const ParamOverrides& ov, const SyntheticConfig& sc) {
  const double var = sc.noise_var;
  const double p = static_cast<double>(sc.p);
  const double s = static_cast<double>(std::max<Index>(sc.s, 1));
  ResolvedParams rp;
  rp.bpdn_lambda = ov.bpdn_lambda.value_or(0.55 * var);

  rp.rwl1.lambda0 = ov.rwl1_lambda0.value_or(0.0011);
  rp.rwl1.tau = ov.rwl1_tau.value_or(1.0);
  rp.rwl1.beta = ov.rwl1_beta.value_or(rp.rwl1.tau);
  rp.rwl1.eta = ov.rwl1_eta.value_or(0.01);
  rp.rwl1.em_iters = ov.rwl1_em_iters.value_or(10);

  rp.bpdndf.gamma = ov.bpdndf_gamma.value_or(0.5 * var);
  rp.bpdndf.kappa = ov.bpdndf_kappa.value_or(0.001 / (p + 1.0));
  rp.bpdndf.q = ov.bpdndf_q.value_or(1);

  rp.rwl1df.lambda0 = ov.rwl1df_lambda0.value_or(0.0011);
  rp.rwl1df.tau = ov.rwl1df_tau.value_or(1.0);
  rp.rwl1df.beta = ov.rwl1df_beta.value_or(1.0);
  rp.rwl1df.eta = ov.rwl1df_eta.value_or(1.0 - 2.0 * p / s);
  rp.rwl1df.em_iters = ov.rwl1df_em_iters.value_or(10);

  const double n = static_cast<double>(sc.n);
  rp.kalman_process_var = ov.kalman_process_var.value_or(std::max(2.0 * p, 1.0) / n);
  rp.kalman_init_var = ov.kalman_init_var.value_or(s / n);
  return rp;
}

ResolvedParams resolve_video_params(const ParamOverrides& ov) {
  ResolvedParams rp;
  rp.bpdn_lambda = ov.bpdn_lambda.value_or(0.01);

  rp.rwl1.lambda0 = ov.rwl1_lambda0.value_or(0.001);
  rp.rwl1.tau = ov.rwl1_tau.value_or(0.05);
  rp.rwl1.beta = ov.rwl1_beta.value_or(rp.rwl1.tau);
  rp.rwl1.eta = ov.rwl1_eta.value_or(0.1);
  rp.rwl1.em_iters = ov.rwl1_em_iters.value_or(10);

  rp.bpdndf.gamma = ov.bpdndf_gamma.value_or(0.01);
  rp.bpdndf.kappa = ov.bpdndf_kappa.value_or(0.4);
  rp.bpdndf.q = ov.bpdndf_q.value_or(2);

  rp.rwl1df.lambda0 = ov.rwl1df_lambda0.value_or(0.001);
  rp.rwl1df.tau = ov.rwl1df_tau.value_or(0.2);
  rp.rwl1df.beta = ov.rwl1df_beta.value_or(1.0);
  rp.rwl1df.eta = ov.rwl1df_eta.value_or(0.2);
  rp.rwl1df.em_iters = ov.rwl1df_em_iters.value_or(10);
  return rp;
}

std::vector<Algorithm> ExperimentConfig::algorithms() const {
  if (!algos.empty()) return algos;
  if (kind == ExperimentKind::synthetic) {
    return {Algorithm::bpdn, Algorithm::rwl1, Algorithm::bpdn_df, Algorithm::rwl1_df,
            Algorithm::kalman};
  }
  return {Algorithm::bpdn, Algorithm::rwl1, Algorithm::bpdn_df, Algorithm::rwl1_df};
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw InvalidConfig("trials must be >= 1");
  if (threads < 1) throw InvalidConfig("threads must be >= 1");
  solver.validate();
  if (kind == ExperimentKind::video) {
    video.validate();
    for (Algorithm a : algorithms()) {
      if (a == Algorithm::kalman) {
        throw InvalidConfig("the Kalman baseline is not available for the video experiment");
      }
    }
  } else {
    synthetic.validate();
  }
  if (kind == ExperimentKind::sweep_m && m_values.empty()) {
    throw InvalidConfig("sweep-m needs at least one m value");
  }
  if (kind == ExperimentKind::sweep_p && p_values.empty()) {
    throw InvalidConfig("sweep-p needs at least one p value");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (kind == ExperimentKind::video) cfg.trials = 1;
  return cfg;
}

std::vector<TrialRecord> run_synthetic_trial(const ExperimentConfig& cfg, int trial_id) {
  cfg.synthetic.validate();
  const ResolvedParams rp = resolve_synthetic_params(cfg.params, cfg.synthetic);
  const SyntheticTrialData data = make_synthetic_trial(cfg.synthetic, cfg.seed, trial_id);
  std::vector<TrialRecord> out;
  for (Algorithm a : cfg.algorithms()) {
    out.push_back(run_synthetic_algorithm(a, data, rp, cfg.solver, cfg.synthetic, trial_id));
  }
  return out;
}

std::vector<TrialRecord> run_synthetic(const ExperimentConfig& cfg) {
  cfg.synthetic.validate();
  const ResolvedParams rp = resolve_synthetic_params(cfg.params, cfg.synthetic);
  const std::vector<Algorithm> algos = cfg.algorithms();
  const std::size_t tasks = static_cast<std::size_t>(cfg.trials) * algos.size();
  std::vector<TrialRecord> records(tasks);
  parallel_for(tasks, cfg.threads, [&](std::size_t i) {
    const int trial = static_cast<int>(i / algos.size());
    const Algorithm a = algos[i % algos.size()];
    // Each task regenerates its trial's data from the trial's own stream.
    const SyntheticTrialData data = make_synthetic_trial(cfg.synthetic, cfg.seed, trial);
    records[i] = run_synthetic_algorithm(a, data, rp, cfg.solver, cfg.synthetic, trial);
  });
  sort_records(records);
  return records;
}

SeriesStats series_stats(std::vector<double> values) {
  SeriesStats st;
  if (values.empty()) {
    st.mean = st.median = st.stderr_mean = kNaN;
    return st;
  }
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.stderr_mean = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  st.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return st;
}

std::vector<SweepRow> aggregate_steady_state(const std::vector<TrialRecord>& records,
                                             double axis_value) {
  std::map<int, std::vector<double>> by_algo;
  std::map<int, int> failed;
  for (const TrialRecord& r : records) {
    const int key = static_cast<int>(r.algorithm);
    by_algo[key];
    if (r.error.empty() && std::isfinite(r.steady_state_rmse)) {
      by_algo[key].push_back(r.steady_state_rmse);
    } else {
      ++failed[key];
    }
  }
  std::vector<SweepRow> rows;
  for (const auto& [key, values] : by_algo) {
    const SeriesStats st = series_stats(values);
    rows.push_back(SweepRow{axis_value, static_cast<Algorithm>(key), st.mean, st.stderr_mean,
                            static_cast<int>(values.size()), failed[key]});
  }
  return rows;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                            const std::vector<Index>& values) {
  if (values.empty()) throw InvalidConfig("sweep: empty axis");
  std::vector<SweepRow> rows;
  for (Index v : values) {
    ExperimentConfig point = cfg;
    if (axis == SweepAxis::m) {
      point.synthetic.m = v;
    } else {
      point.synthetic.p = v;
    }
    const auto records = run_synthetic(point);
    for (const SweepRow& row : aggregate_steady_state(records, static_cast<double>(v))) {
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

struct VideoFrameData {
  std::vector<Vector> truth;  // row-major pixels
  std::vector<MeasurementFrame> frames;
};

VideoFrameData make_video_trial(const ExperimentConfig& cfg, const std::vector<Matrix>& images,
                                int trial_id, Index m) {
  const Index side = cfg.video.crop;
  const Index n = side * side;
  Rng rng = substream(cfg.seed, static_cast<std::uint64_t>(trial_id));
  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.video.noise_var));
  VideoFrameData data;
  for (const Matrix& img : images) {
    Vector x(n);
    for (Index r = 0; r < side; ++r) {
      for (Index c = 0; c < side; ++c) x[r * side + c] = img(r, c);
    }
    LinearOperator phi = noiselet_operator(n, m, rng);
    Vector y = phi.apply(x);
    if (cfg.video.noise_var > 0.0) {
      for (auto& v : y) v += noise(rng);
    }
    data.frames.push_back(MeasurementFrame{std::move(phi), std::move(y), cfg.video.noise_var});
    data.truth.push_back(std::move(x));
  }
  return data;
}

TrialRecord run_video_algorithm(Algorithm algo, const VideoFrameData& data,
                                const LinearOperator& synthesis, const ResolvedParams& rp,
                                const SolverSettings& solver, int trial_id) {
  const Index n = synthesis.in_dim();
  const auto& frames = data.frames;
  switch (algo) {
    case Algorithm::bpdn:
      return run_series(trial_id, algo, data.truth, [&](std::size_t t, bool& ok) {
        const StepOutcome out = bpdn_step(frames[t], synthesis, rp.bpdn_lambda, solver);
        ok = out.converged;
        return synthesis.apply(out.z);
      });
    case Algorithm::rwl1:
      return run_series(trial_id, algo, data.truth, [&](std::size_t t, bool& ok) {
        const StepOutcome out = rwl1_static(frames[t], synthesis, rp.rwl1, solver);
        ok = out.converged;
        return synthesis.apply(out.z);
      });
    case Algorithm::bpdn_df: {
      Vector prev = Vector::Zero(n);
      return run_series(trial_id, algo, data.truth, [&](std::size_t t, bool& ok) {
        BpdnDfParams p = rp.bpdndf;
        if (t == 0) p.kappa = 0.0;
        const Vector prediction = synthesis.apply(prev);  // identity dynamics
        const StepOutcome out = bpdn_df_step(frames[t], synthesis, prediction, p, solver, prev);
        ok = out.converged;
        prev = out.z;
        return synthesis.apply(out.z);
      });
    }
    case Algorithm::rwl1_df: {
      FilterState state{Vector::Zero(n), WeightVector(), 0};
      const DynamicsModel still = DynamicsModel::identity();
      return run_series(trial_id, algo, data.truth, [&](std::size_t t, bool& ok) {
        if (t == 0) {
          const StepOutcome out = rwl1_df_em(frames[t], synthesis, Vector::Zero(n),
                                             Vector::Zero(n), rp.rwl1df, solver);
          state = FilterState{out.z, out.weights, 1, out.em_rounds, out.converged};
        } else {
          state = rwl1_df_step(frames[t], synthesis, state, still, rp.rwl1df, solver);
        }
        ok = state.converged;
        return synthesis.apply(state.z_prev);
      });
    }
    case Algorithm::kalman:
      break;
  }
  throw InvalidConfig("algorithm not available for video: " +
                      std::string(algorithm_tag(algo)));
}

}  // namespace

VideoRun run_video_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_video_experiment(cfg, read_yuv_luma(cfg.video));
}

VideoRun run_video_experiment(const ExperimentConfig& cfg, const std::vector<Matrix>& frames) {
  cfg.validate();
  const WaveletConfig wcfg{cfg.video.taps, cfg.video.levels, cfg.video.crop, WaveletDims::two};
  const LinearOperator synthesis = dwt_synthesis_operator(wcfg);
  VideoRun run;
  run.signal_dim = wcfg.size();
  run.measurements = std::max<Index>(
      1, static_cast<Index>(std::llround(cfg.video.m_over_n * static_cast<double>(run.signal_dim))));
  const ResolvedParams rp = resolve_video_params(cfg.params);
  const std::vector<Algorithm> algos = cfg.algorithms();
  const std::size_t tasks = static_cast<std::size_t>(cfg.trials) * algos.size();
  run.records.resize(tasks);
  parallel_for(tasks, cfg.threads, [&](std::size_t i) {
    const int trial = static_cast<int>(i / algos.size());
    const VideoFrameData data = make_video_trial(cfg, frames, trial, run.measurements);
    run.records[i] =
        run_video_algorithm(algos[i % algos.size()], data, synthesis, rp, cfg.solver, trial);
  });
  sort_records(run.records);
  return run;
}

void write_timeseries_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "trial,t,algorithm,rmse\n";
  for (const TrialRecord& r : records) {
    for (std::size_t t = 0; t < r.rmse.size(); ++t) {
      out << r.trial_id << ',' << (t + 1) << ',' << algorithm_tag(r.algorithm) << ','
          << format_double(r.rmse[t]) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis,algorithm,mean_rmse,stderr\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.axis) << ',' << algorithm_tag(row.algorithm) << ','
        << format_double(row.mean_rmse) << ',' << format_double(row.stderr_rmse) << '\n';
  }
}

std::vector<double> mean_curve(const std::vector<TrialRecord>& records, Algorithm a) {
  std::vector<double> sum;
  std::vector<int> count;
  for (const TrialRecord& r : records) {
    if (r.algorithm != a || !r.error.empty()) continue;
    if (sum.size() < r.rmse.size()) {
      sum.resize(r.rmse.size(), 0.0);
      count.resize(r.rmse.size(), 0);
    }
    for (std::size_t t = 0; t < r.rmse.size(); ++t) {
      sum[t] += r.rmse[t];
      ++count[t];
    }
  }
  for (std::size_t t = 0; t < sum.size(); ++t) sum[t] /= std::max(count[t], 1);
  return sum;
}

void write_summary(std::ostream& out, const std::string& title,
                   const std::vector<TrialRecord>& records, bool histogram) {
  out << title << "\n";
  std::map<int, std::vector<const TrialRecord*>> by_algo;
  for (const TrialRecord& r : records) by_algo[static_cast<int>(r.algorithm)].push_back(&r);

  char line[256];
  std::snprintf(line, sizeof line, "%-8s %7s %12s %12s %14s %12s %8s %9s\n", "algo", "trials",
                "mean_rmse", "median_rmse", "steady_state", "stderr", "failed", "warnings");
  out << line;
  for (const auto& [key, recs] : by_algo) {
    std::vector<double> all;
    std::vector<double> steady;
    int failed = 0;
    int warnings = 0;
    for (const TrialRecord* r : recs) {
      all.insert(all.end(), r->rmse.begin(), r->rmse.end());
      warnings += r->solver_warnings;
      if (r->error.empty()) {
        steady.push_back(r->steady_state_rmse);
      } else {
        ++failed;
      }
    }
    const SeriesStats per_step = series_stats(all);
    const SeriesStats ss = series_stats(steady);
    std::snprintf(line, sizeof line, "%-8s %7zu %12.5g %12.5g %14.5g %12.3g %8d %9d\n",
                  std::string(algorithm_tag(static_cast<Algorithm>(key))).c_str(), recs.size(),
                  per_step.mean, per_step.median, ss.mean, ss.stderr_mean, failed, warnings);
    out << line;
  }
  for (const auto& [key, recs] : by_algo) {
    for (const TrialRecord* r : recs) {
      if (!r->error.empty()) {
        out << "error: trial " << r->trial_id << " " << algorithm_tag(r->algorithm) << ": "
            << r->error << "\n";
      }
    }
  }
  if (!histogram) return;

  constexpr int kBins = 10;
  double top = 0.0;
  for (const TrialRecord& r : records) {
    for (double v : r.rmse) top = std::max(top, v);
  }
  if (!(top > 0.0)) return;
  for (const auto& [key, recs] : by_algo) {
    std::vector<int> bins(kBins, 0);
    for (const TrialRecord* r : recs) {
      for (double v : r->rmse) {
        bins[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>(v / top * kBins)))]++;
      }
    }
    out << "\nhistogram " << algorithm_tag(static_cast<Algorithm>(key)) << " (rmse)\n";
    for (int b = 0; b < kBins; ++b) {
      std::snprintf(line, sizeof line, "  [%8.4g, %8.4g) %5d ", top * b / kBins,
                    top * (b + 1) / kBins, bins[static_cast<std::size_t>(b)]);
      out << line << std::string(static_cast<std::size_t>(bins[static_cast<std::size_t>(b)]), '#')
          << "\n";
    }
  }
}

}  // namespace rwl1df
