// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "hts/level_set.hpp"
#include "hts/mesh.hpp"

using namespace hts;

namespace {

ShapeSpec ball_spec(double r = 0.5) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Ball;
  s.radius = r;
  return s;
}

ShapeSpec shell_spec(double delta) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::BoundaryShell;
  s.shell_delta = delta;
  return s;
}

ShapeSpec half_spec() {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::HalfSpace;
  return s;
}

} // namespace

TEST_CASE("ball level set is the signed distance at the center") {
  const Mesh mesh = build_box_mesh(5, 8);
  const LevelSetField phi = init_shape(ball_spec(), mesh);
  const int center = mesh.b_vertex_index(4, 4, 4);
  REQUIRE(phi.phi[center] == Catch::Approx(-0.5));
}

TEST_CASE("half-space volume is one half exactly on the aligned grid") {
  const Mesh mesh = build_box_mesh(5, 8);
  const TetQuadrature quad = tet_quadrature(2);
  const LevelSetField phi = init_shape(half_spec(), mesh);
  REQUIRE(volume(phi, quad) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("boundary-shell volume approaches 1 - (1-2 delta)^3") {
  const TetQuadrature quad = tet_quadrature(2);
  const double exact = 1.0 - 0.8 * 0.8 * 0.8; // delta = 0.1
  double prev_err = 1e300;
  for (int nb : {8, 16}) {
    const Mesh mesh = build_box_mesh(5, nb);
    const double v = volume(init_shape(shell_spec(0.1), mesh), quad);
    const double err = std::abs(v - exact);
    REQUIRE(err <= 3.0 / nb); // C h
    REQUIRE(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("indicator of constant-sign fields") {
  const Mesh mesh = build_box_mesh(5, 4);
  const TetQuadrature quad = tet_quadrature(2);
  LevelSetField phi(mesh);
  phi.phi.setConstant(-1.0);
  QuadIndicator chi = indicator(phi, quad);
  for (int c : mesh.cells_inside_b())
    for (std::size_t q = 0; q < quad.size(); ++q) REQUIRE(chi(c, static_cast<int>(q)) == 1);
  REQUIRE(indicator_volume(mesh, chi, quad) == Catch::Approx(1.0).epsilon(1e-12));

  phi.phi.setConstant(1.0);
  chi = indicator(phi, quad);
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (std::size_t q = 0; q < quad.size(); ++q) REQUIRE(chi(c, static_cast<int>(q)) == 0);
}

TEST_CASE("plane-interface volume error decays linearly") {
  const TetQuadrature quad = tet_quadrature(2);
  // plane off the grid: z = 0.5 + 0.3/nb keeps the interface inside cells
  for (int nb : {4, 8, 16}) {
    const Mesh mesh = build_box_mesh(5, nb);
    LevelSetField phi(mesh);
    const double z0 = 0.5 + 0.3 / nb;
    for (int i = 0; i < mesh.b_vertex_count(); ++i)
      phi.phi[i] = mesh.b_vertex_coord(i).z() - z0;
    REQUIRE(std::abs(volume(phi, quad) - z0) <= 1.0 / nb);
  }
}

TEST_CASE("ball indicator matches analytic membership away from the interface") {
  const Mesh mesh = build_box_mesh(5, 8);
  const TetQuadrature quad = tet_quadrature(2);
  const LevelSetField phi = init_shape(ball_spec(0.35), mesh);
  const QuadIndicator chi = indicator(phi, quad);
  const double h = 1.0 / mesh.nb;
  for (int c : mesh.cells_inside_b())
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const Vec3 x = mesh.point_at(c, quad.points[q]);
      const double d = (x - Vec3(0.5, 0.5, 0.5)).norm() - 0.35;
      if (std::abs(d) <= h) continue;
      REQUIRE(static_cast<int>(chi(c, static_cast<int>(q))) == (d < 0 ? 1 : 0));
    }
}

TEST_CASE("advection by zero leaves phi unchanged") {
  const Mesh mesh = build_box_mesh(5, 8);
  const LevelSetField phi = init_shape(ball_spec(), mesh);
  const VertexVectorField zero(mesh);
  REQUIRE((advect(phi, zero, 0.3).phi - phi.phi).norm() == 0.0);
}

TEST_CASE("constant advection translates a plane interface") {
  const Mesh mesh = build_box_mesh(5, 16);
  const TetQuadrature quad = tet_quadrature(2);
  LevelSetField phi(mesh);
  for (int i = 0; i < mesh.b_vertex_count(); ++i)
    phi.phi[i] = mesh.b_vertex_coord(i).x() - 0.3;
  VertexVectorField theta(mesh);
  for (auto& v : theta.v) v = Vec3(1.0, 0.0, 0.0);
  const double dt = 0.13;
  const LevelSetField moved = advect(phi, theta, dt);
  // expected volume of {x < 0.3 + dt}
  REQUIRE(volume(moved, quad) == Catch::Approx(0.3 + dt).margin(1.5 / mesh.nb));
  // upwind transport of an exact plane profile is exact in the interior
  for (int k = 2; k < mesh.nb - 1; ++k) {
    const double val = moved.phi[mesh.b_vertex_index(k, 8, 8)];
    REQUIRE(val == Catch::Approx(k / 16.0 - 0.3 - dt).margin(1e-12));
  }
}

TEST_CASE("volume change under radial advection matches the surface flux") {
  const Mesh mesh = build_box_mesh(5, 16);
  const TetQuadrature quad = tet_quadrature(2);
  const double r = 0.3;
  const LevelSetField phi = init_shape(ball_spec(r), mesh);
  VertexVectorField theta(mesh);
  for (int i = 0; i < mesh.b_vertex_count(); ++i)
    theta.v[i] = mesh.b_vertex_coord(i) - Vec3(0.5, 0.5, 0.5);
  const double dt = 0.02;
  const double v0 = volume(phi, quad);
  const double v1 = volume(advect(phi, theta, dt), quad);
  // d|omega|/dt = int_{boundary} theta . n = 4 pi r^3 (outward radial field)
  const double predicted = dt * 4.0 * M_PI * r * r * r;
  CAPTURE(v0, v1, predicted);
  REQUIRE(v1 - v0 == Catch::Approx(predicted).epsilon(0.25));
  REQUIRE(v1 > v0);
}

TEST_CASE("advection consistency: (Theta, dt) equals (2 Theta, dt/2)") {
  const Mesh mesh = build_box_mesh(5, 8);
  const LevelSetField phi = init_shape(ball_spec(0.4), mesh);
  VertexVectorField theta(mesh), theta2(mesh);
  for (int i = 0; i < mesh.b_vertex_count(); ++i) {
    const Vec3 x = mesh.b_vertex_coord(i);
    theta.v[i] = Vec3(std::sin(x.y() * 3.0), 0.2, -x.x());
    theta2.v[i] = 2.0 * theta.v[i];
  }
  const LevelSetField a = advect(phi, theta, 0.05);
  const LevelSetField b = advect(phi, theta2, 0.025);
  REQUIRE((a.phi - b.phi).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("reinitialize: axis-aligned signed distance is a fixed point") {
  const Mesh mesh = build_box_mesh(5, 16);
  LevelSetField phi(mesh);
  const double z0 = 0.5 + 0.3 / mesh.nb;
  for (int i = 0; i < mesh.b_vertex_count(); ++i)
    phi.phi[i] = mesh.b_vertex_coord(i).z() - z0;
  const LevelSetField out = reinitialize(phi, 3);
  const double h = 1.0 / mesh.nb;
  for (int i = 0; i < mesh.b_vertex_count(); ++i) {
    if (std::abs(phi.phi[i]) <= 1.5 * h) continue; // near-interface band excluded
    REQUIRE(out.phi[i] == Catch::Approx(phi.phi[i]).margin(1e-6));
  }
}

TEST_CASE("reinitialize rescales a multiple of the distance on the ball") {
  const Mesh mesh = build_box_mesh(5, 16);
  const LevelSetField d = init_shape(ball_spec(0.3), mesh);
  LevelSetField scaled = d;
  scaled.phi *= 5.0;
  const LevelSetField out = reinitialize(scaled, 4);
  const double h = 1.0 / mesh.nb;
  double worst = 0.0;
  for (int i = 0; i < mesh.b_vertex_count(); ++i)
    worst = std::max(worst, std::abs(out.phi[i] - d.phi[i]));
  REQUIRE(worst <= 3.0 * h);
}

TEST_CASE("reinitialization keeps the enclosed volume within half a percent") {
  const Mesh mesh = build_box_mesh(5, 16);
  const TetQuadrature quad = tet_quadrature(2);
  LevelSetField scaled = init_shape(ball_spec(0.3), mesh);
  scaled.phi *= 5.0;
  const double v0 = volume(scaled, quad);
  const double v1 = volume(reinitialize(scaled, 4), quad);
  REQUIRE(std::abs(v1 - v0) <= 0.005 * v0);
}

TEST_CASE("single-sign field passes through reinitialization unchanged") {
  const Mesh mesh = build_box_mesh(5, 4);
  LevelSetField phi(mesh);
  phi.phi.setConstant(0.7);
  REQUIRE((reinitialize(phi, 2).phi - phi.phi).norm() == 0.0);
}
