// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: state solves, shape optimization runs, shape-derivative
// validation, gamma studies and VTK export.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hts/optimizer.hpp"

namespace {

std::vector<double> parse_gammas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

hts::RunConfig resolve_config(const std::string& config_path, const std::string& out_dir,
                              int example, double gamma, int resolution,
                              const std::string& symmetry) {
  hts::RunConfig cfg;
  if (!config_path.empty()) cfg = hts::load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (example > 0) cfg.example = example;
  if (gamma > 0) cfg.gamma = gamma;
  if (resolution > 0) cfg.n_b = resolution;
  if (!symmetry.empty()) cfg.symmetry = symmetry;
  cfg.validate();
  return cfg;
}

void write_resolved(const hts::RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream os(cfg.out_dir + "/config.resolved.txt");
  os << hts::serialize_config(cfg);
}

int cmd_solve_state(const hts::RunConfig& cfg) {
  using namespace hts;
  write_resolved(cfg);
  const Mesh mesh = make_mesh(cfg.n_omega, cfg.n_b);
  const TetQuadrature quad = tet_quadrature(cfg.quad_degree);
  const ProblemData data = build_problem(cfg, mesh);
  const LevelSetField phi = initial_shape(cfg, mesh);
  const QuadIndicator chi = indicator(phi, quad);
  const StateProblem sp = make_state_problem(data, chi, quad);
  const NewtonOptions nopt{cfg.newton_tol, cfg.newton_max_iter, 20, cfg.gamma_continuation};
  auto [E, rep] = newton_solve(sp, EdgeField(mesh), nopt);
  std::printf("newton: iterations=%d converged=%d damping_steps=%d\n", rep.iterations,
              rep.converged ? 1 : 0, rep.damping_steps);
  for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
    std::printf("  r[%zu] = %.6e\n", i, rep.residual_history[i]);
  const CostBreakdown cost = evaluate_cost(E, data, chi, quad);
  std::printf("J=%.10g tracking=%.10g volume=%.10g\n", cost.total, cost.tracking, cost.volume);

  write_cell_vectors_vtk(mesh, detail::cell_averages(mesh, E, quad), "E",
                         cfg.out_dir + "/E_state.vtk");
  const MultiplierField lam = multiplier(E, data, chi, quad);
  std::vector<double> lam_mag(mesh.n_cells(), 0.0);
  for (std::size_t lc = 0; lc < lam.cells.size(); ++lc) {
    double s = 0.0;
    for (int q = 0; q < lam.nq; ++q) s += lam.at(lc, q).norm();
    lam_mag[lam.cells[lc]] = s / lam.nq;
  }
  write_cell_scalars_vtk(mesh, lam_mag, "lambda_mag", cfg.out_dir + "/lambda_state.vtk");
  return rep.converged ? 0 : 1;
}

int cmd_optimize(const hts::RunConfig& cfg) {
  using namespace hts;
  const Mesh mesh = make_mesh(cfg.n_omega, cfg.n_b);
  const OptimizeResult res = optimize(cfg, mesh, &std::cout);
  const auto& last = res.history.back();
  std::printf("final: iter=%d J=%.10g tracking=%.10g volume=%.10g (%s)\n", last.iter, last.J,
              last.tracking, last.volume,
              res.stopped_by_tolerance ? "dJ tolerance reached" : "iteration limit");
  return 0;
}

int cmd_validate(const hts::RunConfig& cfg, int n_fields, double t0) {
  using namespace hts;
  write_resolved(cfg);
  const Mesh mesh = make_mesh(cfg.n_omega, cfg.n_b);
  const TetQuadrature quad = tet_quadrature(cfg.quad_degree);
  const ProblemData data = build_problem(cfg, mesh);
  const LevelSetField phi = initial_shape(cfg, mesh);
  const QuadIndicator chi = indicator(phi, quad);
  const NewtonOptions nopt{cfg.newton_tol, cfg.newton_max_iter, 20, false};
  const std::vector<double> ts = {t0, t0 / 2, t0 / 4};
  bool all_ok = true;
  std::printf("%8s %12s %16s %16s %12s\n", "theta", "t", "(J_t-J_0)/t", "dJ(theta)", "rel_err");
  for (int f = 0; f < n_fields; ++f) {
    const VertexVectorField theta = random_interior_theta(mesh, 100 + f);
    const auto rows = fd_check(data, chi, quad, theta, ts, nopt);
    double prev = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::printf("%8d %12.3e %16.9e %16.9e %12.3e\n", f, rows[i].t, rows[i].fd_slope, rows[i].dj,
                  rows[i].rel_err);
      if (i == 0 && rows[i].rel_err > 1e-2) all_ok = false;
      if (i > 0 && rows[i].rel_err > prev / 1.8) all_ok = false;
      prev = rows[i].rel_err;
    }
  }
  std::printf("validate-shape-derivative: %s\n", all_ok ? "PASS" : "FAIL");
  return all_ok ? 0 : 1;
}

int cmd_gamma_study(const hts::RunConfig& cfg, const std::string& gammas_csv, bool full) {
  using namespace hts;
  write_resolved(cfg);
  const Mesh mesh = make_mesh(cfg.n_omega, cfg.n_b);
  const std::vector<double> gammas = parse_gammas(gammas_csv);
  if (full) {
    const GammaStudyReport rep = gamma_study_full(cfg, mesh, gammas);
    std::printf("%12s %18s\n", "gamma", "|chi-chi_last|_L1");
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
      std::printf("%12.4g %18.10e\n", rep.rows[i].gamma, rep.chi_l1_to_last[i]);
  } else {
    const GammaStudyReport rep = gamma_study_fixed(cfg, mesh, gammas);
    std::printf("%12s %18s %18s %18s\n", "gamma", "|E-E_last|_Hcurl", "complementarity",
                "dJ(theta_fixed)");
    for (const auto& row : rep.rows)
      std::printf("%12.4g %18.10e %18.10e %18.10e\n", row.gamma, row.dist_hcurl,
                  row.complementarity, row.dj_fixed_theta);
  }
  return 0;
}

int cmd_export_vtk(const hts::RunConfig& cfg) {
  using namespace hts;
  write_resolved(cfg);
  const Mesh mesh = make_mesh(cfg.n_omega, cfg.n_b);
  write_mesh_vtk(mesh, cfg.out_dir + "/mesh.vtk");
  const LevelSetField phi = initial_shape(cfg, mesh);
  write_b_scalar_vtk(mesh, phi.phi, "phi", cfg.out_dir + "/phi_init.vtk");
  std::printf("wrote %s/mesh.vtk and %s/phi_init.vtk\n", cfg.out_dir.c_str(), cfg.out_dir.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape optimization of superconductor designs governed by an "
               "H(curl) variational inequality"};
  app.require_subcommand(1);

  std::string config_path, out_dir, symmetry, gammas = "7e2,7e3,7e4";
  int example = 0, resolution = 0, n_fields = 5;
  double gamma = 0.0, t0 = 1e-3;
  bool full_study = false;

  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--example", example, "example selector (1 or 2)")->check(CLI::Range(1, 2));
  app.add_option("--gamma", gamma, "penalization parameter");
  app.add_option("--resolution", resolution, "cells per axis inside B (n_b)");
  app.add_option("--symmetry", symmetry, "symmetry planes (none or xy)")
      ->check(CLI::IsMember({"none", "xy"}));

  auto* solve = app.add_subcommand("solve-state", "solve the penalized state once");
  auto* opt = app.add_subcommand("optimize", "run the level-set descent loop");
  auto* val = app.add_subcommand("validate-shape-derivative",
                                 "finite-difference check of the distributed shape derivative");
  val->add_option("--fields", n_fields, "number of random directions");
  val->add_option("--t0", t0, "largest finite-difference step");
  auto* study = app.add_subcommand("gamma-study", "penalization convergence study");
  study->add_option("--gammas", gammas, "comma-separated gamma list");
  study->add_flag("--full", full_study, "full optimization per gamma (default: fixed shape)");
  auto* exp = app.add_subcommand("export-vtk", "write the mesh and initial level set");

  CLI11_PARSE(app, argc, argv);

  try {
    const hts::RunConfig cfg =
        resolve_config(config_path, out_dir, example, gamma, resolution, symmetry);
    if (solve->parsed()) return cmd_solve_state(cfg);
    if (opt->parsed()) return cmd_optimize(cfg);
    if (val->parsed()) return cmd_validate(cfg, n_fields, t0);
    if (study->parsed()) return cmd_gamma_study(cfg, gammas, full_study);
    if (exp->parsed()) return cmd_export_vtk(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
