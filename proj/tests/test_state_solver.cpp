// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hts/level_set.hpp"
#include "hts/state_solver.hpp"

using namespace hts;

namespace {

struct Fixture {
  Mesh mesh;
  TetQuadrature quad;
  ProblemData data;
  LevelSetField phi;
  QuadIndicator chi;

  Fixture(int n_omega, int n_b, double gamma, double j_c, double R,
          ShapeSpec::Kind kind = ShapeSpec::Kind::BoundaryShell)
      : mesh(make_mesh(n_omega, n_b)), quad(tet_quadrature(2)),
        data(build_example1(mesh, gamma, j_c)) {
    data.coil_R = R;
    ShapeSpec spec;
    spec.kind = kind;
    spec.shell_delta = 0.1;
    phi = init_shape(spec, mesh);
    chi = indicator(phi, quad);
  }
};

QuadIndicator empty_indicator(const Mesh& mesh, const TetQuadrature& quad) {
  return QuadIndicator(mesh, static_cast<int>(quad.size()));
}

// Independent residual: closed-form element matrices for a(E, phi_i) plus a
// hand-rolled 4-point rule for the omega term.
VecX oracle_residual(const StateProblem& sp, const EdgeField& E) {
  const Mesh& mesh = *sp.mesh;
  const PenaltyParams pen = sp.penalty();
  VecX r = -sp.load;
  const double aa = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
  const double bb = (5.0 - std::sqrt(5.0)) / 20.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellBasis b = cell_basis(mesh, c);
    const double V = b.volume;
    const auto coeff = E.cell_coeffs(c);
    const auto& g = b.grad_lambda;
    auto S = [V](int a, int d) { return V * ((a == d) ? 0.1 : 0.05); };
    for (int e = 0; e < 6; ++e) {
      const int se = mesh.cell_edges[c][e];
      const int de = mesh.edge_dof[std::abs(se) - 1];
      if (de < 0) continue;
      const double sgn = (se > 0) ? 1.0 : -1.0;
      double val = 0.0;
      for (int f = 0; f < 6; ++f) {
        const int i = kTetEdges[e][0], j = kTetEdges[e][1];
        const int k = kTetEdges[f][0], l = kTetEdges[f][1];
        const double mass = g[j].dot(g[l]) * S(i, k) - g[j].dot(g[k]) * S(i, l) -
                            g[i].dot(g[l]) * S(j, k) + g[i].dot(g[k]) * S(j, l);
        const double curl = 4.0 * V * g[i].cross(g[j]).dot(g[k].cross(g[l]));
        val += (mass + curl) * coeff[f];
      }
      for (int q = 0; q < 4; ++q) {
        if (!sp.chi(c, q)) continue;
        Eigen::Vector4d bary = Eigen::Vector4d::Constant(bb);
        bary[q] = aa;
        val += (6.0 * V / 24.0) *
               lambda_gamma(pen, E.value(c, b, bary)).dot(whitney_value(b, e, bary));
      }
      r[de] += sgn * val;
    }
  }
  return r;
}

} // namespace

TEST_CASE("empty omega reduces to the linear problem") {
  Fixture fx(5, 4, 7e2, 1.0, 1e-3);
  const QuadIndicator chi0 = empty_indicator(fx.mesh, fx.quad);
  const StateProblem sp = make_state_problem(fx.data, chi0, fx.quad);
  auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 50});
  REQUIRE(rep.converged);
  REQUIRE(rep.iterations == 1);
  REQUIRE(sp.residual(E).norm() <= 1e-12);
}

TEST_CASE("zero source has the zero solution with zero residual") {
  Fixture fx(5, 4, 7e2, 1.0, 0.0); // R = 0 switches the coil off
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  REQUIRE(sp.residual(EdgeField(fx.mesh)).norm() == 0.0);
}

TEST_CASE("residual matches an independent per-cell oracle") {
  Fixture fx(5, 4, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  std::mt19937 rng(21);
  std::normal_distribution<double> gauss(0.0, 1e-3);
  EdgeField E(fx.mesh);
  for (int i = 0; i < E.dof.size(); ++i) E.dof[i] = gauss(rng);
  const VecX r1 = sp.residual(E);
  const VecX r2 = oracle_residual(sp, E);
  REQUIRE((r1 - r2).norm() <= 1e-12 * r2.norm());
}

TEST_CASE("Example-1 fixture: convergence, superlinear tail, report invariants") {
  Fixture fx(10, 8, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 50});
  REQUIRE(rep.converged);
  REQUIRE(rep.iterations <= 25);
  REQUIRE(rep.residual_history.back() <= 1e-10);
  for (std::size_t i = 1; i < rep.residual_history.size(); ++i)
    REQUIRE(rep.residual_history[i] < rep.residual_history[i - 1]);
  // superlinear contraction over the final three steps
  const std::size_t n = rep.residual_history.size();
  REQUIRE(n >= 4);
  const double rho1 = rep.residual_history[n - 3] / rep.residual_history[n - 4];
  const double rho2 = rep.residual_history[n - 2] / rep.residual_history[n - 3];
  const double rho3 = rep.residual_history[n - 1] / rep.residual_history[n - 2];
  CAPTURE(rho1, rho2, rho3);
  REQUIRE(rho2 < rho1);
  REQUIRE(rho3 < rho2);

  // nonlinearity is genuinely exercised
  int active = 0;
  for (int c : fx.mesh.cells_inside_b()) {
    const CellBasis b = cell_basis(fx.mesh, c);
    for (std::size_t q = 0; q < fx.quad.size(); ++q)
      if (fx.chi(c, static_cast<int>(q)) &&
          classify(fx.data.penalty, E.value(c, b, fx.quad.points[q])) == PointClass::Active)
        ++active;
  }
  REQUIRE(active > 100);
}

TEST_CASE("gamma continuation does not increase the final-stage iteration count") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E_cold, rep_cold] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 50});
  NewtonOptions copt{1e-10, 50};
  copt.gamma_continuation = true;
  auto [E_cont, rep_cont] = newton_solve(sp, EdgeField(fx.mesh), copt);
  REQUIRE(rep_cold.converged);
  REQUIRE(rep_cont.converged);
  REQUIRE(rep_cont.iterations <= rep_cold.iterations);
  REQUIRE((E_cold.dof - E_cont.dof).norm() <= 1e-7 * std::max(1.0, E_cold.dof.norm()));
}

TEST_CASE("solution is independent of the initial guess") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  const SpMat identity_op = assemble_curl_curl_mass(
      fx.mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, fx.quad);
  auto [E1, rep1] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-12, 50});
  std::mt19937 rng(31);
  std::normal_distribution<double> gauss(0.0, 1e-2);
  EdgeField init(fx.mesh);
  for (int i = 0; i < init.dof.size(); ++i) init.dof[i] = gauss(rng);
  auto [E2, rep2] = newton_solve(sp, init, NewtonOptions{1e-12, 50});
  REQUIRE(rep1.converged);
  REQUIRE(rep2.converged);
  REQUIRE(hcurl_norm(identity_op, E1.dof - E2.dof) <= 1e-8);
}

TEST_CASE("energy bound with the explicit sqrt|omega| factor") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 50});
  REQUIRE(rep.converged);
  const SpMat identity_op = assemble_curl_curl_mass(
      fx.mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, fx.quad);
  double f_l2 = 0.0;
  for (int c = 0; c < fx.mesh.n_cells(); ++c) {
    const double scale = 6.0 * fx.mesh.cell_volume(c);
    for (std::size_t q = 0; q < fx.quad.size(); ++q)
      f_l2 += fx.quad.weights[q] * scale *
              fx.data.source(fx.mesh.point_at(c, fx.quad.points[q])).squaredNorm();
  }
  const double omega_vol = indicator_volume(fx.mesh, fx.chi, fx.quad);
  const double bound = std::sqrt(f_l2) + fx.data.penalty.j_c * std::sqrt(omega_vol);
  REQUIRE(hcurl_norm(identity_op, E.dof) <= bound * (1.0 + 1e-10));
}

TEST_CASE("stability under indicator perturbations") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  const SpMat identity_op = assemble_curl_curl_mass(
      fx.mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, fx.quad);
  const StateProblem sp1 = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E1, rep1] = newton_solve(sp1, EdgeField(fx.mesh), NewtonOptions{1e-11, 50});
  std::mt19937 rng(41);
  for (int trial = 0; trial < 3; ++trial) {
    QuadIndicator chi2 = fx.chi;
    // flip a random subset of quadrature points inside B
    for (int c : fx.mesh.cells_inside_b())
      for (std::size_t q = 0; q < fx.quad.size(); ++q)
        if ((rng() & 7u) == 0) chi2.at(c, static_cast<int>(q)) ^= 1;
    const StateProblem sp2 = make_state_problem(fx.data, chi2, fx.quad);
    auto [E2, rep2] = newton_solve(sp2, EdgeField(fx.mesh), NewtonOptions{1e-11, 50});
    REQUIRE(rep2.converged);
    double l2_diff_sq = 0.0;
    for (int c : fx.mesh.cells_inside_b()) {
      const double scale = 6.0 * fx.mesh.cell_volume(c);
      for (std::size_t q = 0; q < fx.quad.size(); ++q) {
        const double d = static_cast<double>(fx.chi(c, static_cast<int>(q))) -
                         static_cast<double>(chi2(c, static_cast<int>(q)));
        l2_diff_sq += fx.quad.weights[q] * scale * d * d;
      }
    }
    const double rhs = fx.data.penalty.j_c * std::sqrt(l2_diff_sq);
    REQUIRE(hcurl_norm(identity_op, E1.dof - E2.dof) <= rhs * (1.0 + 1e-8));
  }
}

TEST_CASE("multiplier: bound, zero extension, zero state") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 50});
  const MultiplierField lam = multiplier(E, fx.data, fx.chi, fx.quad);
  for (std::size_t lc = 0; lc < lam.cells.size(); ++lc)
    for (int q = 0; q < lam.nq; ++q) {
      REQUIRE(lam.at(lc, q).norm() <= fx.data.penalty.j_c * (1.0 + 1e-14));
      if (!fx.chi(lam.cells[lc], q)) REQUIRE(lam.at(lc, q).norm() == 0.0);
    }
  const MultiplierField zero = multiplier(EdgeField(fx.mesh), fx.data, fx.chi, fx.quad);
  for (const auto& v : zero.lam) REQUIRE(v.norm() == 0.0);
}

TEST_CASE("complementarity residual decreases in gamma") {
  // half-space shape with j_c = 1e-2: mixed active/inactive sets at every
  // gamma, so the residual is nonzero and the limit behaviour is visible
  double prev = 1e300;
  std::vector<double> values;
  for (double gamma : {7e2, 7e3, 7e4}) {
    Fixture fx(5, 6, gamma, 1e-2, 5e-2, ShapeSpec::Kind::HalfSpace);
    const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
    auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 80});
    REQUIRE(rep.converged);
    const double c = complementarity_residual(E, fx.data, fx.chi, fx.quad);
    REQUIRE(c < prev);
    prev = c;
    values.push_back(c);
  }
  REQUIRE(values.front() >= 10.0 * values.back());
}

TEST_CASE("failure reporting: iteration cap and broken operator") {
  Fixture fx(5, 6, 7e2, 1e-3, 5e-2);
  StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  auto [E, rep] = newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-14, 1});
  REQUIRE_FALSE(rep.converged);
  REQUIRE(rep.iterations == 1);
  REQUIRE(rep.residual_history.size() == 2);

  sp.A.setZero(); // singular operator must surface as a failure
  REQUIRE_THROWS_AS(newton_solve(sp, EdgeField(fx.mesh), NewtonOptions{1e-10, 5}),
                    std::runtime_error);
}
