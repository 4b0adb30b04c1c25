// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hts/adjoint_solver.hpp"
#include "hts/level_set.hpp"
#include "hts/linear_solver.hpp"

using namespace hts;

namespace {

struct Fixture {
  Mesh mesh;
  TetQuadrature quad;
  ProblemData data;
  QuadIndicator chi;
  EdgeField E;

  Fixture(int n_omega = 5, int n_b = 6, double gamma = 7e2, double j_c = 1e-3, double R = 5e-2)
      : mesh(make_mesh(n_omega, n_b)), quad(tet_quadrature(2)),
        data(build_example1(mesh, gamma, j_c)) {
    data.coil_R = R;
    ShapeSpec spec;
    spec.kind = ShapeSpec::Kind::BoundaryShell;
    spec.shell_delta = 0.1;
    chi = indicator(init_shape(spec, mesh), quad);
    const StateProblem sp = make_state_problem(data, chi, quad);
    auto [sol, rep] = newton_solve(sp, EdgeField(mesh), NewtonOptions{1e-11, 50});
    REQUIRE(rep.converged);
    E = std::move(sol);
  }
};

double max_abs(const SpMat& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

double psi_quadratic_form(const Fixture& fx, const EdgeField& E, const EdgeField& P) {
  double s = 0.0;
  for (int c : fx.mesh.cells_inside_b()) {
    const CellBasis b = cell_basis(fx.mesh, c);
    const double scale = 6.0 * b.volume;
    for (std::size_t q = 0; q < fx.quad.size(); ++q) {
      if (!fx.chi(c, static_cast<int>(q))) continue;
      const Vec3 p = P.value(c, b, fx.quad.points[q]);
      s += fx.quad.weights[q] * scale *
           (psi_gamma(fx.data.penalty, E.value(c, b, fx.quad.points[q])) * p).dot(p);
    }
  }
  return s;
}

} // namespace

TEST_CASE("adjoint vanishes when the target matches the state") {
  Fixture fx;
  ProblemData data = fx.data;
  data.target_kind = TargetKind::Ball; // discrete target path
  data.E_d = fx.E;
  const StateProblem sp = make_state_problem(data, fx.chi, fx.quad);
  const EdgeField P = adjoint_solve(sp, fx.E);
  REQUIRE(P.dof.norm() <= 1e-12);
}

TEST_CASE("adjoint system matrix equals the Newton Jacobian transpose") {
  Fixture fx;
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  const SpMat J = sp.jacobian(fx.E);
  const SpMat M = sp.adjoint_matrix(fx.E);
  const SpMat D = (SpMat(J.transpose()) - M).pruned();
  REQUIRE(max_abs(D) <= 1e-12 * max_abs(J));
}

TEST_CASE("adjoint residual and boundedness") {
  Fixture fx;
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  const EdgeField P = adjoint_solve(sp, fx.E);
  // residual of the adjoint linear system
  const VecX res = sp.adjoint_matrix(fx.E) * P.dof - adjoint_rhs(sp, fx.E);
  REQUIRE(res.norm() <= 1e-10 * std::max(1.0, adjoint_rhs(sp, fx.E).norm()));

  // bound ||P|| <= kappa (||E||_B + ||E_d||_B) / min(nu, eps), using the
  // verified pointwise nonnegativity of psi
  const SpMat identity_op = assemble_curl_curl_mass(
      fx.mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, fx.quad);
  const auto in_b = [&](int c) { return fx.mesh.region[c] == Region::InsideB; };
  const double e_b = field_l2_norm(fx.mesh, fx.E, fx.quad, in_b);
  const double bound = 8e7 * e_b; // E_d = 0, kappa constant, min(nu,eps) = 1
  REQUIRE(hcurl_norm(identity_op, P.dof) <= bound * (1.0 + 1e-8));
}

TEST_CASE("psi quadratic form is nonnegative for solved and random fields") {
  Fixture fx;
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  const EdgeField P = adjoint_solve(sp, fx.E);
  const SpMat identity_op = assemble_curl_curl_mass(
      fx.mesh, [](const Vec3&) { return Mat3::Identity(); },
      [](const Vec3&) { return Mat3::Identity(); }, fx.quad);
  const double scale_P = P.dof.dot(identity_op * P.dof);
  REQUIRE(psi_quadratic_form(fx, fx.E, P) >= -1e-12 * scale_P);

  std::mt19937 rng(51);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 100; ++k) {
    EdgeField R(fx.mesh);
    for (int i = 0; i < R.dof.size(); ++i) R.dof[i] = gauss(rng);
    REQUIRE(psi_quadratic_form(fx, fx.E, R) >= -1e-12 * R.dof.dot(identity_op * R.dof));
  }
}

TEST_CASE("duality: adjoint pairing matches the linearized-state pairing") {
  Fixture fx;
  const StateProblem sp = make_state_problem(fx.data, fx.chi, fx.quad);
  const EdgeField P = adjoint_solve(sp, fx.E);
  const VecX g = -adjoint_rhs(sp, fx.E); // dJ/dE coefficients
  DirectSolver solver(sp.jacobian(fx.E));
  REQUIRE(solver.info() == Eigen::Success);
  std::mt19937 rng(61);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 5; ++k) {
    VecX df(fx.mesh.n_dof);
    for (int i = 0; i < df.size(); ++i) df[i] = gauss(rng);
    const VecX u = solver.solve(df);
    const double lhs = g.dot(u);
    const double rhs = -P.dof.dot(df);
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-8));
  }
}
