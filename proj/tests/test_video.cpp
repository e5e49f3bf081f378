#include "doctest.h"

#include "rwl1df/harness.hpp"
#include "rwl1df/video.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rwl1df;

namespace {

// Two 4x4 frames: luma bytes 16*f + i, chroma filled with 200.
std::string write_fixture() {
  const auto path = (std::filesystem::temp_directory_path() / "rwl1df_fixture_4x4.yuv").string();
  std::ofstream out(path, std::ios::binary);
  for (int f = 0; f < 2; ++f) {
    for (int i = 0; i < 16; ++i) out.put(static_cast<char>(16 * f + i));
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>(200));
  }
  return path;
}

VideoConfig fixture_config(const std::string& path) {
  VideoConfig vc;
  vc.yuv_path = path;
  vc.width = 4;
  vc.height = 4;
  vc.crop = 4;
  vc.frames = 2;
  vc.levels = 1;
  return vc;
}

}  // namespace

TEST_CASE("luma frames from a hand-built file") {
  const std::string path = write_fixture();
  VideoConfig vc = fixture_config(path);
  CHECK(vc.frame_bytes() == 24);
  const auto frames = read_yuv_luma(vc);
  REQUIRE(frames.size() == 2);
  for (int f = 0; f < 2; ++f) {
    for (Index r = 0; r < 4; ++r) {
      for (Index c = 0; c < 4; ++c) {
        CHECK(frames[static_cast<std::size_t>(f)](r, c) == (16.0 * f + 4 * r + c) / 255.0);
      }
    }
  }

  vc.frames = 1;
  CHECK(read_yuv_luma(vc).size() == 1);

  vc.crop = 2;
  vc.frames = 2;
  const auto cropped = read_yuv_luma(vc);
  CHECK(cropped[1](0, 0) == (16.0 + 5.0) / 255.0);
  CHECK(cropped[1](1, 1) == (16.0 + 10.0) / 255.0);
}

TEST_CASE("truncated and missing files") {
  const std::string path = write_fixture();
  VideoConfig vc = fixture_config(path);
  vc.frames = 3;
  try {
    read_yuv_luma(vc);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("byte offset 48") != std::string::npos);
  }
  vc.yuv_path = "/nonexistent/video.yuv";
  CHECK_THROWS_AS(read_yuv_luma(vc), IngestionError);
  vc.yuv_path = path;
  vc.crop = 3;
  CHECK_THROWS_AS(vc.validate(), InvalidConfig);
}

TEST_CASE("panning sequences round trip through the reader") {
  std::vector<unsigned char> src(32 * 32);
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<unsigned char>(i % 251);
  const auto path = (std::filesystem::temp_directory_path() / "rwl1df_pan.yuv").string();
  const std::vector<PanOffset> offsets{{0, 0}, {3, 1}};
  write_panning_yuv(path, src, 32, 32, 8, 8, offsets);
  VideoConfig vc;
  vc.yuv_path = path;
  vc.width = 8;
  vc.height = 8;
  vc.crop = 8;
  vc.frames = 2;
  vc.levels = 1;
  const auto frames = read_yuv_luma(vc);
  CHECK(frames[0](0, 0) == src[0] / 255.0);
  CHECK(frames[1](2, 5) == src[(1 + 2) * 32 + 3 + 5] / 255.0);

  const auto sched = test_pan_offsets(30, 40, 40);
  CHECK(sched.size() == 30);
  CHECK(sched[0].dx == sched[1].dx);
}

TEST_CASE("full noise-free sampling recovers every frame") {
  std::vector<Matrix> frames;
  Rng rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix base = Matrix::NullaryExpr(16, 16, [&] { return u(rng); });
  for (int f = 0; f < 3; ++f) frames.push_back(base + 0.01 * f * Matrix::Ones(16, 16));
  ExperimentConfig cfg = default_config(ExperimentKind::video);
  cfg.video.crop = 16;
  cfg.video.width = 16;
  cfg.video.height = 16;
  cfg.video.frames = 3;
  cfg.video.m_over_n = 1.0;
  cfg.video.levels = 2;
  cfg.params.bpdn_lambda = 1e-7;
  cfg.params.rwl1_lambda0 = 1e-7;
  cfg.params.bpdndf_gamma = 1e-7;
  cfg.params.bpdndf_kappa = 1e-7;
  cfg.params.rwl1df_lambda0 = 1e-7;
  const VideoRun run = run_video_experiment(cfg, frames);
  CHECK(run.signal_dim == 256);
  CHECK(run.measurements == 256);
  REQUIRE(run.records.size() == 4);
  for (const auto& r : run.records) {
    CAPTURE(algorithm_tag(r.algorithm));
    REQUIRE(r.rmse.size() == 3);
    for (double v : r.rmse) CHECK(v < 1e-3);
  }
}

TEST_CASE("video runs are deterministic") {
  std::vector<Matrix> frames;
  Rng rng(72);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int f = 0; f < 2; ++f) frames.push_back(Matrix::NullaryExpr(16, 16, [&] { return u(rng); }));
  ExperimentConfig cfg = default_config(ExperimentKind::video);
  cfg.video.crop = 16;
  cfg.video.width = 16;
  cfg.video.height = 16;
  cfg.video.frames = 2;
  cfg.video.levels = 2;
  cfg.threads = 1;
  std::ostringstream a;
  write_timeseries_csv(a, run_video_experiment(cfg, frames).records);
  cfg.threads = 4;
  std::ostringstream b;
  write_timeseries_csv(b, run_video_experiment(cfg, frames).records);
  CHECK(a.str() == b.str());
}
