// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hts/adjoint_solver.hpp"
#include "hts/config.hpp"
#include "hts/descent.hpp"
#include "hts/level_set.hpp"
#include "hts/shape_derivative.hpp"
#include "hts/vtk_io.hpp"

namespace hts {

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double tracking = 0.0;
  double volume = 0.0;
  double dj_theta = 0.0;
  int newton_iters = 0;
  double step = 0.0;
  std::string flags; // empty or TOPOLOGY_EVENT
};

inline std::string history_csv_header() {
  return "iter,J,tracking,volume,dJ_theta,newton_iters,step,flags";
}

inline std::string to_csv(const IterationRecord& r) {
  char buf[360];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%s", r.iter, r.J,
                r.tracking, r.volume, r.dj_theta, r.newton_iters, r.step, r.flags.c_str());
  return std::string(buf);
}

struct LineSearchOptions {
  double dt0_factor = 1.0;
  int max_backtracks = 8;
  double c1 = 1e-4;
};

struct LineSearchResult {
  LevelSetField phi;
  double step = 0.0;
  bool armijo_accepted = false; // false => unconditional accept (TOPOLOGY_EVENT)
  EdgeField E;
  int newton_iters = 0;
  CostBreakdown cost;
};

/// Backtracking over the pseudo-time step: accept the first dt with
/// J(advect(phi, Theta, dt)) <= J - c1 dt |dJ(Theta)|; after the last
/// backtrack the smallest dt is accepted unconditionally (the level-set
/// method legitimately passes through cost increases at topology changes).
inline LineSearchResult line_search(const LevelSetField& phi, const VertexVectorField& Theta,
                                    const ProblemData& data, double J_current, double dj_theta,
                                    const TetQuadrature& quad, const LineSearchOptions& opt,
                                    const NewtonOptions& nopt, const EdgeField& warm_start) {
  const Mesh& mesh = *data.mesh;
  const double vmax = Theta.max_norm();
  if (vmax < 1e-300) {
    LineSearchResult r;
    r.phi = phi;
    r.E = warm_start;
    r.cost = CostBreakdown{J_current, 0.0, 0.0};
    r.armijo_accepted = true;
    return r;
  }
  const double h = 1.0 / mesh.nb;
  const double dt0 = opt.dt0_factor * h / vmax;
  std::optional<LineSearchResult> fallback;
  for (int k = 0; k <= opt.max_backtracks; ++k) {
    const double dt = dt0 * std::pow(0.5, k);
    LevelSetField trial = advect(phi, Theta, dt);
    const QuadIndicator chi = indicator(trial, quad);
    const StateProblem sp = make_state_problem(data, chi, quad);
    EdgeField E;
    NewtonReport rep;
    try {
      std::tie(E, rep) = newton_solve(sp, warm_start, nopt);
    } catch (const std::runtime_error&) {
      continue; // trial rejected, smaller dt
    }
    if (!rep.converged) continue;
    const CostBreakdown cost = evaluate_cost(E, data, chi, quad);
    LineSearchResult r;
    r.phi = std::move(trial);
    r.step = dt;
    r.E = std::move(E);
    r.newton_iters = rep.iterations;
    r.cost = cost;
    if (cost.total <= J_current - opt.c1 * dt * std::abs(dj_theta)) {
      r.armijo_accepted = true;
      return r;
    }
    fallback = std::move(r); // keep the smallest evaluated step
  }
  if (!fallback)
    throw std::runtime_error("line_search: no feasible trial step (state solves failed)");
  fallback->armijo_accepted = false;
  return *fallback;
}

struct OptimizeResult {
  LevelSetField phi;
  std::vector<IterationRecord> history;
  bool stopped_by_tolerance = false;
};

namespace detail {

inline std::vector<Vec3> cell_averages(const Mesh& mesh, const EdgeField& u,
                                       const TetQuadrature& quad) {
  std::vector<Vec3> out(mesh.n_cells(), Vec3::Zero());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellBasis b = cell_basis(mesh, c);
    Vec3 s = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      s += quad.weights[q] * u.value(c, b, quad.points[q]);
      wsum += quad.weights[q];
    }
    out[c] = s / wsum;
  }
  return out;
}

inline std::string snapshot_name(const std::string& dir, const char* stem, int iter) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.vtk", stem, iter);
  return dir + "/" + buf;
}

} // namespace detail

inline ProblemData build_problem(const RunConfig& cfg, const Mesh& mesh) {
  ProblemData data = (cfg.example == 1)
                         ? build_example1(mesh, cfg.gamma, cfg.j_c)
                         : build_example2(mesh, cfg.gamma, cfg.j_c, cfg.quad_degree,
                                          NewtonOptions{cfg.newton_tol, cfg.newton_max_iter});
  const double kap = cfg.kappa;
  data.kappa = [kap](const Vec3&) { return kap; };
  data.coil_R = cfg.coil_R;
  data.target_jacobian = cfg.target_jacobian;
  return data;
}

inline LevelSetField initial_shape(const RunConfig& cfg, const Mesh& mesh) {
  ShapeSpec spec;
  if (cfg.init_shape == "shell") {
    spec.kind = ShapeSpec::Kind::BoundaryShell;
    spec.shell_delta = cfg.shell_delta;
  } else if (cfg.init_shape == "ball") {
    spec.kind = ShapeSpec::Kind::Ball;
    spec.radius = cfg.ball_r;
  } else {
    spec.kind = ShapeSpec::Kind::HalfSpace;
  }
  return init_shape(spec, mesh);
}

/// The outer loop: state -> adjoint -> density -> descent -> symmetrize ->
/// line search -> advect (+ periodic reinitialization), with CSV history and
/// VTK snapshots written under cfg.out_dir as the run progresses.
inline OptimizeResult optimize(const RunConfig& cfg, const Mesh& mesh, std::ostream* log = nullptr) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream os(cfg.out_dir + "/config.resolved.txt");
    os << serialize_config(cfg);
  }
  std::ofstream hist(cfg.out_dir + "/history.csv");
  hist << history_csv_header() << "\n";

  const TetQuadrature quad = tet_quadrature(cfg.quad_degree);
  const ProblemData data = build_problem(cfg, mesh);
  const NewtonOptions nopt{cfg.newton_tol, cfg.newton_max_iter, 20, cfg.gamma_continuation};
  const LineSearchOptions lopt{cfg.ls_dt0_factor, cfg.ls_max_backtracks, cfg.ls_c1};
  DescentParams dpar;
  dpar.alpha1 = cfg.alpha1;
  dpar.alpha2 = cfg.alpha2;
  dpar.alpha3 = cfg.alpha3;
  dpar.strict_zero_boundary = cfg.strict_boundary_descent;

  OptimizeResult result;
  result.phi = initial_shape(cfg, mesh);
  EdgeField E_warm(mesh);
  int accepted_steps = 0;

  const auto emit = [&](const IterationRecord& rec) {
    result.history.push_back(rec);
    hist << to_csv(rec) << "\n";
    hist.flush();
    if (log) *log << to_csv(rec) << "\n";
  };

  for (int it = 0;; ++it) {
    const QuadIndicator chi = indicator(result.phi, quad);
    const StateProblem sp = make_state_problem(data, chi, quad);
    auto [E, rep] = newton_solve(sp, E_warm, nopt);
    if (!rep.converged) throw std::runtime_error("optimize: state solve failed at iteration " +
                                                 std::to_string(it));
    E_warm = E;
    const CostBreakdown cost = evaluate_cost(E, data, chi, quad);
    const EdgeField P = adjoint_solve(sp, E);
    const ShapeGradientDensity den = assemble_density(E, P, data, chi, quad);
    VertexVectorField Theta = solve_descent(den, dpar, mesh);
    if (cfg.symmetry == "xy")
      Theta = symmetrize(Theta, {SymmetryPlane::XHalf, SymmetryPlane::YHalf});
    const double dj = density_pairing(den, Theta);

    IterationRecord rec;
    rec.iter = it;
    rec.J = cost.total;
    rec.tracking = cost.tracking;
    rec.volume = cost.volume;
    rec.dj_theta = dj;
    rec.newton_iters = rep.iterations;

    if (cfg.vtk_period > 0 && it % cfg.vtk_period == 0) {
      write_b_scalar_vtk(mesh, result.phi.phi, "phi", detail::snapshot_name(cfg.out_dir, "phi", it));
      write_cell_vectors_vtk(mesh, detail::cell_averages(mesh, E, quad), "E",
                             detail::snapshot_name(cfg.out_dir, "E", it));
      write_cell_vectors_vtk(mesh, detail::cell_averages(mesh, P, quad), "P",
                             detail::snapshot_name(cfg.out_dir, "P", it));
      write_b_vectors_vtk(mesh, Theta.v, "theta", detail::snapshot_name(cfg.out_dir, "theta", it));
    }

    const bool at_limit = it >= cfg.max_outer_iters;
    const bool converged = std::abs(dj) < cfg.dj_tol;
    if (at_limit || converged) {
      emit(rec);
      result.stopped_by_tolerance = converged;
      break;
    }

    LineSearchResult ls =
        line_search(result.phi, Theta, data, cost.total, dj, quad, lopt, nopt, E_warm);
    rec.step = ls.step;
    if (!ls.armijo_accepted) rec.flags = "TOPOLOGY_EVENT";
    emit(rec);

    result.phi = std::move(ls.phi);
    E_warm = std::move(ls.E);
    ++accepted_steps;
    if (cfg.reinit_period > 0 && accepted_steps % cfg.reinit_period == 0)
      result.phi = reinitialize(result.phi);
  }
  return result;
}

struct GammaStudyRow {
  double gamma = 0.0;
  double dist_hcurl = 0.0;     // ||E^gamma - E^{gamma_last}||_{H(curl)}
  double complementarity = 0.0;
  double dj_fixed_theta = 0.0; // dJ_gamma(theta) for one fixed theta
};

struct GammaStudyReport {
  std::vector<GammaStudyRow> rows;    // fixed-omega mode
  std::vector<double> chi_l1_to_last; // full-run mode only
};

/// Fixed-omega gamma study: solve the state for each gamma on the same
/// indicator, report H(curl) distances to the largest gamma, complementarity
/// residuals and the shape derivative of one fixed direction.
inline GammaStudyReport gamma_study_fixed(const RunConfig& cfg, const Mesh& mesh,
                                          const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("gamma_study_fixed: need at least one gamma");
  const TetQuadrature quad = tet_quadrature(cfg.quad_degree);
  const LevelSetField phi = initial_shape(cfg, mesh);
  const QuadIndicator chi = indicator(phi, quad);
  const NewtonOptions nopt{cfg.newton_tol, cfg.newton_max_iter, 20, cfg.gamma_continuation};
  const VertexVectorField theta = random_interior_theta(mesh, 2026u);
  const SpMat identity_op = assemble_curl_curl_mass(
      mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, quad);

  GammaStudyReport report;
  std::vector<EdgeField> solutions;
  for (double g : gammas) {
    RunConfig c = cfg;
    c.gamma = g;
    const ProblemData data = build_problem(c, mesh);
    const StateProblem sp = make_state_problem(data, chi, quad);
    auto [E, rep] = newton_solve(sp, EdgeField(mesh), nopt);
    if (!rep.converged)
      throw std::runtime_error("gamma_study_fixed: state solve failed at gamma " + std::to_string(g));
    const EdgeField P = adjoint_solve(sp, E);
    const ShapeGradientDensity den = assemble_density(E, P, data, chi, quad);
    GammaStudyRow row;
    row.gamma = g;
    row.complementarity = complementarity_residual(E, data, chi, quad);
    row.dj_fixed_theta = directional_derivative(den, theta);
    report.rows.push_back(row);
    solutions.push_back(std::move(E));
  }
  for (std::size_t i = 0; i < solutions.size(); ++i)
    report.rows[i].dist_hcurl =
        hcurl_norm(identity_op, solutions[i].dof - solutions.back().dof);
  return report;
}

/// Full-run gamma study: optimize for each gamma and compare the final
/// indicator functions in L1 against the largest gamma.
inline GammaStudyReport gamma_study_full(const RunConfig& cfg, const Mesh& mesh,
                                         const std::vector<double>& gammas) {
  const TetQuadrature quad = tet_quadrature(cfg.quad_degree);
  GammaStudyReport report;
  std::vector<QuadIndicator> finals;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    RunConfig c = cfg;
    c.gamma = gammas[i];
    c.out_dir = cfg.out_dir + "/gamma_" + std::to_string(i);
    OptimizeResult res = optimize(c, mesh);
    finals.push_back(indicator(res.phi, quad));
    GammaStudyRow row;
    row.gamma = gammas[i];
    report.rows.push_back(row);
  }
  for (std::size_t i = 0; i < finals.size(); ++i) {
    double l1 = 0.0;
    for (int c : mesh.cells_inside_b()) {
      const double scale = 6.0 * mesh.cell_volume(c);
      for (std::size_t q = 0; q < quad.size(); ++q)
        l1 += quad.weights[q] * scale *
              std::abs(static_cast<double>(finals[i](c, static_cast<int>(q))) -
                       static_cast<double>(finals.back()(c, static_cast<int>(q))));
    }
    report.chi_l1_to_last.push_back(l1);
  }
  return report;
}

} // namespace hts
