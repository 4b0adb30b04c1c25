// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hts {

/// Plain key=value run configuration; defaults reproduce the reference
/// numerical setup (gamma = 7e4, kappa = 8e7, alpha = (0.5, 0.5, 1.0), unit
/// materials, coil resistance 1e-3).
struct RunConfig {
  int example = 1;            // 1: zero target, 2: ball target
  int n_omega = 10;           // cells per axis outside B (multiple of 5)
  int n_b = 8;                // cells per axis inside B
  double gamma = 7e4;
  double j_c = 1.0;
  double kappa = 8e7;
  double coil_R = 1e-3;
  int quad_degree = 2;

  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  bool gamma_continuation = false;

  double alpha1 = 0.5;
  double alpha2 = 0.5;
  double alpha3 = 1.0;
  std::string symmetry = "xy"; // none | xy
  bool strict_boundary_descent = false;

  int max_outer_iters = 100;
  double dj_tol = 1e-8;
  double ls_dt0_factor = 1.0;
  int ls_max_backtracks = 8;
  double ls_c1 = 1e-4;
  int reinit_period = 5;

  std::string init_shape = "shell"; // shell | ball | half
  double shell_delta = 0.1;
  double ball_r = 0.5;
  bool target_jacobian = true;

  int vtk_period = 10; // 0 disables snapshots
  std::string out_dir = "out";

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("RunConfig: " + m); };
    if (example != 1 && example != 2) fail("example must be 1 or 2");
    if (n_omega < 5 || n_omega % 5 != 0) fail("n_omega must be a positive multiple of 5");
    if (n_b < 2) fail("n_b must be >= 2");
    if (gamma <= 0 || j_c <= 0 || kappa <= 0 || coil_R <= 0) fail("physical parameters must be positive");
    if (quad_degree < 1 || quad_degree > 4) fail("quad_degree must be in 1..4");
    if (newton_tol <= 0 || newton_max_iter < 1) fail("invalid Newton settings");
    if (alpha1 <= 0 || alpha2 <= 0 || alpha3 < 0) fail("need alpha1, alpha2 > 0 and alpha3 >= 0");
    if (symmetry != "none" && symmetry != "xy") fail("symmetry must be none or xy");
    if (max_outer_iters < 0) fail("max_outer_iters must be >= 0");
    if (ls_dt0_factor <= 0 || ls_c1 <= 0 || ls_max_backtracks < 0) fail("invalid line-search settings");
    if (reinit_period < 0 || vtk_period < 0) fail("periods must be >= 0");
    if (init_shape != "shell" && init_shape != "ball" && init_shape != "half")
      fail("init_shape must be shell, ball or half");
    if (shell_delta <= 0 || shell_delta >= 0.5) fail("shell_delta must be in (0, 0.5)");
    if (ball_r <= 0 || ball_r > 0.5) fail("ball_r must be in (0, 0.5]");
  }
};

namespace detail {

template <typename T>
void parse_into(const std::string& v, T& out) {
  std::istringstream is(v);
  is >> out;
  if (is.fail()) throw std::invalid_argument("bad config value: " + v);
}

inline void parse_into(const std::string& v, std::string& out) { out = v; }

inline void parse_into(const std::string& v, bool& out) {
  if (v == "1" || v == "true" || v == "on")
    out = true;
  else if (v == "0" || v == "false" || v == "off")
    out = false;
  else
    throw std::invalid_argument("bad boolean config value: " + v);
}

} // namespace detail

inline void apply_config_line(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_into;
  if (key == "example") parse_into(value, c.example);
  else if (key == "n_omega") parse_into(value, c.n_omega);
  else if (key == "n_b") parse_into(value, c.n_b);
  else if (key == "gamma") parse_into(value, c.gamma);
  else if (key == "j_c") parse_into(value, c.j_c);
  else if (key == "kappa") parse_into(value, c.kappa);
  else if (key == "coil_R") parse_into(value, c.coil_R);
  else if (key == "quad_degree") parse_into(value, c.quad_degree);
  else if (key == "newton_tol") parse_into(value, c.newton_tol);
  else if (key == "newton_max_iter") parse_into(value, c.newton_max_iter);
  else if (key == "gamma_continuation") parse_into(value, c.gamma_continuation);
  else if (key == "alpha1") parse_into(value, c.alpha1);
  else if (key == "alpha2") parse_into(value, c.alpha2);
  else if (key == "alpha3") parse_into(value, c.alpha3);
  else if (key == "symmetry") parse_into(value, c.symmetry);
  else if (key == "strict_boundary_descent") parse_into(value, c.strict_boundary_descent);
  else if (key == "max_outer_iters") parse_into(value, c.max_outer_iters);
  else if (key == "dj_tol") parse_into(value, c.dj_tol);
  else if (key == "ls_dt0_factor") parse_into(value, c.ls_dt0_factor);
  else if (key == "ls_max_backtracks") parse_into(value, c.ls_max_backtracks);
  else if (key == "ls_c1") parse_into(value, c.ls_c1);
  else if (key == "reinit_period") parse_into(value, c.reinit_period);
  else if (key == "init_shape") parse_into(value, c.init_shape);
  else if (key == "shell_delta") parse_into(value, c.shell_delta);
  else if (key == "ball_r") parse_into(value, c.ball_r);
  else if (key == "target_jacobian") parse_into(value, c.target_jacobian);
  else if (key == "vtk_period") parse_into(value, c.vtk_period);
  else if (key == "out_dir") parse_into(value, c.out_dir);
  else throw std::invalid_argument("unknown config key: " + key);
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      const auto b = s.find_last_not_of(" \t\r\n");
      return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    apply_config_line(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "example=" << c.example << "\n"
     << "n_omega=" << c.n_omega << "\n"
     << "n_b=" << c.n_b << "\n"
     << "gamma=" << c.gamma << "\n"
     << "j_c=" << c.j_c << "\n"
     << "kappa=" << c.kappa << "\n"
     << "coil_R=" << c.coil_R << "\n"
     << "quad_degree=" << c.quad_degree << "\n"
     << "newton_tol=" << c.newton_tol << "\n"
     << "newton_max_iter=" << c.newton_max_iter << "\n"
     << "gamma_continuation=" << (c.gamma_continuation ? 1 : 0) << "\n"
     << "alpha1=" << c.alpha1 << "\n"
     << "alpha2=" << c.alpha2 << "\n"
     << "alpha3=" << c.alpha3 << "\n"
     << "symmetry=" << c.symmetry << "\n"
     << "strict_boundary_descent=" << (c.strict_boundary_descent ? 1 : 0) << "\n"
     << "max_outer_iters=" << c.max_outer_iters << "\n"
     << "dj_tol=" << c.dj_tol << "\n"
     << "ls_dt0_factor=" << c.ls_dt0_factor << "\n"
     << "ls_max_backtracks=" << c.ls_max_backtracks << "\n"
     << "ls_c1=" << c.ls_c1 << "\n"
     << "reinit_period=" << c.reinit_period << "\n"
     << "init_shape=" << c.init_shape << "\n"
     << "shell_delta=" << c.shell_delta << "\n"
     << "ball_r=" << c.ball_r << "\n"
     << "target_jacobian=" << (c.target_jacobian ? 1 : 0) << "\n"
     << "vtk_period=" << c.vtk_period << "\n"
     << "out_dir=" << c.out_dir << "\n";
  return os.str();
}

} // namespace hts
