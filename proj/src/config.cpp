#include "rwl1df/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace rwl1df {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what) {
  throw InvalidConfig("config key `" + std::string(key) + "`: expected " + what + ", got `" +
                      std::string(value) + "`");
}

double to_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != s.size()) bad_value(key, value, "a number");
  return v;
}

long long to_int(std::string_view key, std::string_view value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::vector<Index> to_index_list(std::string_view key, std::string_view value) {
  std::vector<Index> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const std::size_t comma = std::min(value.find(',', pos), value.size());
    const std::string_view item = trim(value.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(static_cast<Index>(to_int(key, item)));
    pos = comma + 1;
  }
  if (out.empty()) bad_value(key, value, "a comma-separated list of integers");
  return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto& ov = cfg.params;
  auto& sc = cfg.synthetic;
  auto& vc = cfg.video;
  auto& sv = cfg.solver;

  const auto d = [&] { return to_double(key, value); };
  const auto i = [&] { return to_int(key, value); };

  if (key == "seed") cfg.seed = static_cast<std::uint64_t>(i());
  else if (key == "trials") cfg.trials = static_cast<int>(i());
  else if (key == "threads") cfg.threads = static_cast<int>(i());
  else if (key == "out") cfg.out_dir = std::string(value);
  else if (key == "algos") cfg.algos = parse_algorithm_list(value);
  else if (key == "sweep.m_values") cfg.m_values = to_index_list(key, value);
  else if (key == "sweep.p_values") cfg.p_values = to_index_list(key, value);
  else if (key == "synthetic.n") sc.n = static_cast<Index>(i());
  else if (key == "synthetic.s") sc.s = static_cast<Index>(i());
  else if (key == "synthetic.m") sc.m = static_cast<Index>(i());
  else if (key == "synthetic.p") sc.p = static_cast<Index>(i());
  else if (key == "synthetic.noise_var") sc.noise_var = d();
  else if (key == "synthetic.t_steps") sc.t_steps = static_cast<Index>(i());
  else if (key == "video.path") vc.yuv_path = std::string(value);
  else if (key == "video.width") vc.width = static_cast<Index>(i());
  else if (key == "video.height") vc.height = static_cast<Index>(i());
  else if (key == "video.crop") vc.crop = static_cast<Index>(i());
  else if (key == "video.frames") vc.frames = static_cast<Index>(i());
  else if (key == "video.m_over_n") vc.m_over_n = d();
  else if (key == "video.taps") vc.taps = static_cast<int>(i());
  else if (key == "video.levels") vc.levels = static_cast<int>(i());
  else if (key == "video.noise_var") vc.noise_var = d();
  else if (key == "solver.max_iters") sv.max_iters = static_cast<int>(i());
  else if (key == "solver.rel_tol") sv.rel_tol = d();
  else if (key == "solver.power_iters") sv.power_iters = static_cast<int>(i());
  else if (key == "solver.polish") sv.polish = to_bool(key, value);
  else if (key == "solver.exact_max_dim") sv.exact_max_dim = static_cast<Index>(i());
  else if (key == "bpdn.lambda") ov.bpdn_lambda = d();
  else if (key == "rwl1.lambda0") ov.rwl1_lambda0 = d();
  else if (key == "rwl1.tau") ov.rwl1_tau = d();
  else if (key == "rwl1.beta") ov.rwl1_beta = d();
  else if (key == "rwl1.eta") ov.rwl1_eta = d();
  else if (key == "rwl1.em_iters") ov.rwl1_em_iters = static_cast<int>(i());
  else if (key == "bpdndf.gamma") ov.bpdndf_gamma = d();
  else if (key == "bpdndf.kappa") ov.bpdndf_kappa = d();
  else if (key == "bpdndf.q") ov.bpdndf_q = static_cast<int>(i());
  else if (key == "rwl1df.lambda0") ov.rwl1df_lambda0 = d();
  else if (key == "rwl1df.tau") ov.rwl1df_tau = d();
  else if (key == "rwl1df.beta") ov.rwl1df_beta = d();
  else if (key == "rwl1df.eta") ov.rwl1df_eta = d();
  else if (key == "rwl1df.em_iters") ov.rwl1df_em_iters = static_cast<int>(i());
  else if (key == "kalman.process_var") ov.kalman_process_var = d();
  else if (key == "kalman.init_var") ov.kalman_init_var = d();
  else throw InvalidConfig("unknown config key `" + std::string(key) + "`");
}

void load_config(std::istream& in, ExperimentConfig& cfg) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidConfig("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file `" + path + "`");
  load_config(in, cfg);
}

}  // namespace rwl1df
