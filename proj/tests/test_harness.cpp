#include "doctest.h"

#include "rwl1df/config.hpp"
#include "rwl1df/harness.hpp"

#include <sstream>

using namespace rwl1df;

namespace {

ExperimentConfig small_synthetic() {
  ExperimentConfig cfg = default_config(ExperimentKind::synthetic);
  cfg.synthetic.n = 64;
  cfg.synthetic.s = 5;
  cfg.synthetic.m = 24;
  cfg.synthetic.p = 1;
  cfg.synthetic.t_steps = 6;
  cfg.trials = 3;
  cfg.seed = 99;
  return cfg;
}

std::string timeseries(const std::vector<TrialRecord>& recs) {
  std::ostringstream out;
  write_timeseries_csv(out, recs);
  return out.str();
}

}  // namespace

TEST_CASE("rmse") {
  const Vector x = (Vector(2) << 3.0, 4.0).finished();
  CHECK(rmse(x, x) == 0.0);
  CHECK(rmse(x, Vector::Zero(2)) == 1.0);
  CHECK(rmse(x, (Vector(2) << 3.0, 0.0).finished()) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK_THROWS_AS(rmse(Vector::Zero(2), x), UndefinedMetric);
  CHECK_THROWS_AS(rmse(x, Vector::Zero(3)), InvalidDimension);
}

TEST_CASE("steady state averages the last fifth") {
  CHECK(steady_state_window(50) == 10);
  CHECK(steady_state_window(1) == 1);
  CHECK(steady_state_window(3) == 1);
  std::vector<double> s(50, 1.0);
  for (int i = 40; i < 50; ++i) s[static_cast<std::size_t>(i)] = 3.0;
  CHECK(steady_state(s) == 3.0);
}

TEST_CASE("series statistics") {
  const SeriesStats st = series_stats({1.0, 2.0, 3.0, 10.0});
  CHECK(st.mean == 4.0);
  CHECK(st.median == 2.5);
  // sample sd = sqrt(((9+4+1+36)/3)), stderr = sd / 2
  CHECK(st.stderr_mean == doctest::Approx(std::sqrt(50.0 / 3.0) / 2.0));
}

TEST_CASE("algorithm tags") {
  CHECK(algorithm_tag(Algorithm::rwl1_df) == "rwl1df");
  CHECK(parse_algorithm("bpdndf") == Algorithm::bpdn_df);
  CHECK_THROWS_AS(parse_algorithm("lasso"), InvalidConfig);
  const auto list = parse_algorithm_list("rwl1df, bpdn,rwl1df");
  REQUIRE(list.size() == 2);
  CHECK(list[0] == Algorithm::bpdn);
  CHECK(list[1] == Algorithm::rwl1_df);
}

TEST_CASE("synthetic parameter defaults") {
  SyntheticConfig sc;
  const ResolvedParams rp = resolve_synthetic_params({}, sc);
  CHECK(rp.bpdn_lambda == doctest::Approx(0.55 * 0.001));
  CHECK(rp.rwl1.lambda0 == 0.0011);
  CHECK(rp.rwl1.tau == 1.0);
  CHECK(rp.rwl1.eta == 0.01);
  CHECK(rp.bpdndf.gamma == doctest::Approx(0.5 * 0.001));
  CHECK(rp.bpdndf.kappa == doctest::Approx(0.001 / 4.0));
  CHECK(rp.bpdndf.q == 1);
  CHECK(rp.rwl1df.lambda0 == 0.0011);
  CHECK(rp.rwl1df.tau == 1.0);
  CHECK(rp.rwl1df.eta == doctest::Approx(1.0 - 2.0 * 3.0 / 20.0));

  ParamOverrides ov;
  ov.rwl1df_tau = 0.3;
  CHECK(resolve_synthetic_params(ov, sc).rwl1df.tau == 0.3);
}

TEST_CASE("video parameter defaults") {
  const ResolvedParams rp = resolve_video_params({});
  CHECK(rp.bpdn_lambda == 0.01);
  CHECK(rp.rwl1.lambda0 == 0.001);
  CHECK(rp.rwl1.tau == 0.05);
  CHECK(rp.rwl1.eta == 0.1);
  CHECK(rp.bpdndf.gamma == 0.01);
  CHECK(rp.bpdndf.kappa == 0.4);
  CHECK(rp.bpdndf.q == 2);
  CHECK(rp.rwl1df.lambda0 == 0.001);
  CHECK(rp.rwl1df.tau == 0.2);
  CHECK(rp.rwl1df.beta == 1.0);
  CHECK(rp.rwl1df.eta == 0.2);
}

TEST_CASE("config files") {
  ExperimentConfig cfg = default_config(ExperimentKind::synthetic);
  std::istringstream in(
      "# comment\n"
      "\n"
      "trials = 7\n"
      "synthetic.m=60\n"
      "rwl1df.tau = 0.5   # trailing\n"
      "solver.exact_max_dim = 0\n"
      "algos = bpdn,kalman\n");
  load_config(in, cfg);
  CHECK(cfg.trials == 7);
  CHECK(cfg.synthetic.m == 60);
  CHECK(*cfg.params.rwl1df_tau == 0.5);
  CHECK(cfg.solver.exact_max_dim == 0);
  CHECK(cfg.algorithms().size() == 2);

  std::istringstream bad("trials=3\nnot.a.key=1\n");
  try {
    load_config(bad, cfg);
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_setting(cfg, "trials", "many"), InvalidConfig);
  CHECK_THROWS_AS(load_config_file("/nonexistent/cfg.txt", cfg), InvalidConfig);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = default_config(ExperimentKind::video);
  CHECK(cfg.trials == 1);
  CHECK(cfg.algorithms().size() == 4);
  cfg.algos = {Algorithm::kalman};
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  ExperimentConfig syn = default_config(ExperimentKind::synthetic);
  CHECK(syn.algorithms().size() == 5);
  syn.trials = 0;
  CHECK_THROWS_AS(syn.validate(), InvalidConfig);
}

TEST_CASE("synthetic runs are reproducible and thread independent") {
  ExperimentConfig cfg = small_synthetic();
  cfg.threads = 1;
  const auto a = run_synthetic(cfg);
  cfg.threads = 3;
  const auto b = run_synthetic(cfg);
  CHECK(a.size() == 3 * 5);
  CHECK(timeseries(a) == timeseries(b));
  for (const auto& r : a) {
    CHECK(r.error.empty());
    CHECK(r.rmse.size() == 6);
  }
  const auto first = run_synthetic_trial(cfg, 0);
  for (std::size_t k = 0; k < first.size(); ++k) CHECK(first[k].rmse == a[k].rmse);
}

TEST_CASE("noise-free full sampling recovers the state") {
  ExperimentConfig cfg = small_synthetic();
  cfg.synthetic.m = 64;
  cfg.synthetic.noise_var = 0.0;
  cfg.trials = 1;
  cfg.params.bpdn_lambda = 1e-6;
  cfg.params.bpdndf_gamma = 1e-6;
  cfg.params.bpdndf_kappa = 1e-6;
  cfg.params.rwl1_lambda0 = 1e-6;
  cfg.params.rwl1df_lambda0 = 1e-6;
  for (const auto& r : run_synthetic(cfg)) {
    CAPTURE(algorithm_tag(r.algorithm));
    CHECK(r.error.empty());
    for (double v : r.rmse) CHECK(v < 1e-3);
  }
}

TEST_CASE("single-point sweep equals the trial aggregate") {
  ExperimentConfig cfg = small_synthetic();
  cfg.algos = {Algorithm::bpdn, Algorithm::rwl1_df};
  const auto rows = sweep(cfg, SweepAxis::m, {cfg.synthetic.m});
  const auto agg = aggregate_steady_state(run_synthetic(cfg), static_cast<double>(cfg.synthetic.m));
  REQUIRE(rows.size() == agg.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].algorithm == agg[k].algorithm);
    CHECK(rows[k].mean_rmse == agg[k].mean_rmse);
    CHECK(rows[k].stderr_rmse == agg[k].stderr_rmse);
    CHECK(rows[k].trials == 3);
  }
  std::ostringstream out;
  write_sweep_csv(out, rows);
  CHECK(out.str().rfind("axis,algorithm,mean_rmse,stderr\n", 0) == 0);
}

TEST_CASE("timeseries csv layout") {
  TrialRecord r;
  r.trial_id = 2;
  r.algorithm = Algorithm::rwl1;
  r.rmse = {0.5, 0.25};
  CHECK(timeseries({r}) == "trial,t,algorithm,rmse\n2,1,rwl1,0.5\n2,2,rwl1,0.25\n");
  std::ostringstream summary;
  write_summary(summary, "test", {r}, true);
  CHECK(summary.str().find("rwl1") != std::string::npos);
}
