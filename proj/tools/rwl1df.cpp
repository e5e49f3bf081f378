// Benchmark runner for the sparse dynamic filters.

#include "rwl1df/config.hpp"
#include "rwl1df/harness.hpp"
#include "rwl1df/noiselet.hpp"
#include "rwl1df/operators.hpp"
#include "rwl1df/solvers.hpp"
#include "rwl1df/video.hpp"
#include "rwl1df/wavelet.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace rwl1df;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> algos;
  std::optional<int> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--trials", f.trials, "number of trials");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--algos", f.algos, "comma list of bpdn,rwl1,bpdndf,rwl1df,kalman");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--set", f.sets, "extra key=value setting (repeatable)");
}

ExperimentConfig build_config(ExperimentKind kind, const CommonFlags& f) {
  ExperimentConfig cfg = default_config(kind);
  if (!f.config.empty()) load_config_file(f.config, cfg);
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidConfig("--set expects key=value, got `" + kv + "`");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.out) cfg.out_dir = *f.out;
  if (f.algos) cfg.algos = parse_algorithm_list(*f.algos);
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void print_sweep(const std::vector<SweepRow>& rows, const char* axis) {
  std::printf("%6s %-8s %12s %12s %7s\n", axis, "algo", "mean_rmse", "stderr", "failed");
  for (const SweepRow& r : rows) {
    std::printf("%6g %-8s %12.5g %12.3g %7d\n", r.axis,
                std::string(algorithm_tag(r.algorithm)).c_str(), r.mean_rmse, r.stderr_rmse,
                r.failed);
  }
}

int cmd_synthetic(const CommonFlags& f) {
  const ExperimentConfig cfg = build_config(ExperimentKind::synthetic, f);
  const auto records = run_synthetic(cfg);
  {
    auto csv = open_out(cfg, "synthetic_timeseries.csv");
    write_timeseries_csv(csv, records);
  }
  auto txt = open_out(cfg, "synthetic_summary.txt");
  char title[160];
  std::snprintf(title, sizeof title, "synthetic: N=%lld S=%lld M=%lld p=%lld trials=%d seed=%llu",
                static_cast<long long>(cfg.synthetic.n), static_cast<long long>(cfg.synthetic.s),
                static_cast<long long>(cfg.synthetic.m), static_cast<long long>(cfg.synthetic.p),
                cfg.trials, static_cast<unsigned long long>(cfg.seed));
  write_summary(txt, title, records, false);
  write_summary(std::cout, title, records, false);
  return 0;
}

int cmd_sweep(const CommonFlags& f, SweepAxis axis) {
  const ExperimentKind kind = axis == SweepAxis::m ? ExperimentKind::sweep_m : ExperimentKind::sweep_p;
  const ExperimentConfig cfg = build_config(kind, f);
  const auto& values = axis == SweepAxis::m ? cfg.m_values : cfg.p_values;
  const auto rows = sweep(cfg, axis, values);
  auto csv = open_out(cfg, axis == SweepAxis::m ? "sweep_m.csv" : "sweep_p.csv");
  write_sweep_csv(csv, rows);
  print_sweep(rows, axis == SweepAxis::m ? "m" : "p");
  return 0;
}

int cmd_video(const CommonFlags& f, const std::string& yuv, const std::string& pan_source) {
  ExperimentConfig cfg = build_config(ExperimentKind::video, f);
  if (!yuv.empty()) cfg.video.yuv_path = yuv;
  if (!pan_source.empty()) {
    cfg.video.yuv_path = (fs::path(cfg.out_dir) / "panning.yuv").string();
    const auto image = read_gray_image(pan_source, 256, 256);
    write_panning_yuv(cfg.video.yuv_path, image, 256, 256, cfg.video.width, cfg.video.height,
                      test_pan_offsets(cfg.video.frames, 256 - cfg.video.width,
                                       256 - cfg.video.height));
  }
  if (cfg.video.yuv_path.empty()) {
    throw InvalidConfig("video needs --yuv <file>, --pan-source <image> or video.path");
  }
  const VideoRun run = run_video_experiment(cfg);
  {
    auto csv = open_out(cfg, "video_timeseries.csv");
    write_timeseries_csv(csv, run.records);
  }
  char title[200];
  std::snprintf(title, sizeof title, "video: %s crop=%lld frames=%d N=%lld M=%lld",
                cfg.video.yuv_path.c_str(), static_cast<long long>(cfg.video.crop),
                cfg.video.frames, static_cast<long long>(run.signal_dim),
                static_cast<long long>(run.measurements));
  auto txt = open_out(cfg, "video_summary.txt");
  write_summary(txt, title, run.records, true);
  write_summary(std::cout, title, run.records, true);
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok, double value) {
    std::printf("%-4s %-40s %.3g\n", ok ? "ok" : "FAIL", name, value);
    if (!ok) ++failures;
  };
  Rng rng(7);

  const auto gauss = gaussian_sensing(30, 64, rng).as_operator();
  check("gaussian adjoint", adjoint_mismatch(gauss, rng, 8) < 1e-10,
        adjoint_mismatch(gauss, rng, 8));

  const auto nl = noiselet_operator(64, 20, rng);
  check("noiselet adjoint", adjoint_mismatch(nl, rng, 8) < 1e-10, adjoint_mismatch(nl, rng, 8));
  const Matrix t = noiselet_operator(16, 16, rng).materialize();
  const double ortho = (t.transpose() * t - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff();
  check("noiselet orthonormal (n=16)", ortho < 1e-12, ortho);

  const WaveletConfig wc{4, 3, 16, WaveletDims::two};
  const auto w = dwt_synthesis_operator(wc);
  check("dwt adjoint", adjoint_mismatch(w, rng, 8) < 1e-10, adjoint_mismatch(w, rng, 8));
  const Vector x = Vector::NullaryExpr(wc.size(), [&] { return std::normal_distribution<>()(rng); });
  const double rt = (w.apply(w.adjoint(x)) - x).cwiseAbs().maxCoeff();
  check("dwt round trip", rt < 1e-10, rt);

  WeightedL1Problem p{gauss, Vector::NullaryExpr(30, [&] { return std::normal_distribution<>()(rng); }),
                      0.1, WeightVector::Constant(64, 1.0), std::nullopt, {}};
  const SolveResult r = solve_weighted_l1(p, SolverSettings{});
  const double kkt = kkt_violation(p, r.z);
  check("weighted l1 KKT", kkt <= kkt_tolerance(p), kkt);

  std::printf("%s\n", failures == 0 ? "selftest passed" : "selftest FAILED");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal dynamic filtering benchmarks for time-varying sparse signals"};
  app.require_subcommand(1);

  CommonFlags synth_f, sweep_m_f, sweep_p_f, video_f;
  auto* synth = app.add_subcommand("synthetic", "Monte Carlo convergence experiment");
  add_common(synth, synth_f);
  auto* swm = app.add_subcommand("sweep-m", "steady-state rMSE versus measurements");
  add_common(swm, sweep_m_f);
  auto* swp = app.add_subcommand("sweep-p", "steady-state rMSE versus innovation sparsity");
  add_common(swp, sweep_p_f);
  auto* video = app.add_subcommand("video", "compressive video recovery");
  add_common(video, video_f);
  std::string yuv, pan_source;
  video->add_option("--yuv", yuv, "planar YUV 4:2:0 input");
  video->add_option("--pan-source", pan_source,
                    "render a panning sequence from a 256x256 8-bit gray image instead");
  auto* selftest = app.add_subcommand("selftest", "quick operator and solver checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synthetic(synth_f);
    if (swm->parsed()) return cmd_sweep(sweep_m_f, SweepAxis::m);
    if (swp->parsed()) return cmd_sweep(sweep_p_f, SweepAxis::p);
    if (video->parsed()) return cmd_video(video_f, yuv, pan_source);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
