// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hts/fields.hpp"
#include "hts/mesh.hpp"
#include "hts/quadrature.hpp"

namespace hts {

struct ShapeSpec {
  enum class Kind { BoundaryShell, Ball, HalfSpace };
  Kind kind = Kind::BoundaryShell;
  double shell_delta = 0.1;           // BoundaryShell: material within delta of dB
  Vec3 center = Vec3(0.5, 0.5, 0.5);  // Ball
  double radius = 0.5;                // Ball
  int half_axis = 2;                  // HalfSpace: phi = x[axis] - offset
  double half_offset = 0.5;
};

/// Signed level-set initialization: phi < 0 exactly on the requested region.
inline LevelSetField init_shape(const ShapeSpec& spec, const Mesh& mesh) {
  LevelSetField f(mesh);
  for (int i = 0; i < mesh.b_vertex_count(); ++i) {
    const Vec3 x = mesh.b_vertex_coord(i);
    switch (spec.kind) {
      case ShapeSpec::Kind::BoundaryShell: {
        double d = 1.0;
        for (int a = 0; a < 3; ++a) d = std::min({d, x[a], 1.0 - x[a]});
        f.phi[i] = d - spec.shell_delta;
        break;
      }
      case ShapeSpec::Kind::Ball:
        f.phi[i] = (x - spec.center).norm() - spec.radius;
        break;
      case ShapeSpec::Kind::HalfSpace:
        f.phi[i] = x[spec.half_axis] - spec.half_offset;
        break;
    }
  }
  return f;
}

/// Sharp indicator of {phi < 0} at the quadrature points of cells inside B.
inline QuadIndicator indicator(const LevelSetField& ls, const TetQuadrature& quad) {
  const Mesh& mesh = *ls.mesh;
  QuadIndicator chi(mesh, static_cast<int>(quad.size()));
  for (int c : mesh.cells_inside_b()) {
    std::array<double, 4> pv;
    for (int a = 0; a < 4; ++a) pv[a] = ls.phi[mesh.global_to_b_vertex(mesh.cells[c][a])];
    for (std::size_t q = 0; q < quad.size(); ++q) {
      double val = 0.0;
      for (int a = 0; a < 4; ++a) val += quad.points[q][a] * pv[a];
      chi.at(c, static_cast<int>(q)) = (val < 0.0) ? 1 : 0;
    }
  }
  return chi;
}

/// |omega| by quadrature: sum of weights over indicator-positive points.
inline double indicator_volume(const Mesh& mesh, const QuadIndicator& chi,
                               const TetQuadrature& quad) {
  double vol = 0.0;
  for (int c : mesh.cells_inside_b()) {
    const double scale = 6.0 * mesh.cell_volume(c);
    for (std::size_t q = 0; q < quad.size(); ++q)
      if (chi(c, static_cast<int>(q))) vol += quad.weights[q] * scale;
  }
  return vol;
}

inline double volume(const LevelSetField& ls, const TetQuadrature& quad) {
  return indicator_volume(*ls.mesh, indicator(ls, quad), quad);
}

/// One (sub-stepped) explicit upwind step of phi_t + Theta . grad phi = 0 on
/// the B vertex lattice. dt is subdivided internally to satisfy the CFL bound
/// dt_sub * max|Theta| <= 0.9 h.
inline LevelSetField advect(const LevelSetField& ls, const VertexVectorField& theta, double dt) {
  const Mesh& mesh = *ls.mesh;
  const int n = mesh.nb + 1;
  const double h = 1.0 / mesh.nb;
  const double vmax = theta.max_norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(dt * vmax / (0.9 * h))));
  const double dts = dt / steps;

  LevelSetField out = ls;
  VecX next(out.phi.size());
  const auto idx = [&](int i, int j, int k) { return mesh.b_vertex_index(i, j, k); };
  for (int s = 0; s < steps; ++s) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const int v = idx(i, j, k);
          const Vec3 th = theta.v[v];
          const int c[3] = {i, j, k};
          double flux = 0.0;
          for (int a = 0; a < 3; ++a) {
            int im[3] = {i, j, k}, ip[3] = {i, j, k};
            im[a] = std::max(0, c[a] - 1);
            ip[a] = std::min(n - 1, c[a] + 1);
            const double pm = out.phi[idx(im[0], im[1], im[2])];
            const double pp = out.phi[idx(ip[0], ip[1], ip[2])];
            const double pc = out.phi[v];
            // one-sided differences; at lattice boundaries the available side is used
            const double dminus = (c[a] > 0) ? (pc - pm) / h : (pp - pc) / h;
            const double dplus = (c[a] < n - 1) ? (pp - pc) / h : (pc - pm) / h;
            flux += std::max(th[a], 0.0) * dminus + std::min(th[a], 0.0) * dplus;
          }
          next[v] = out.phi[v] - dts * flux;
        }
    out.phi.swap(next);
  }
  return out;
}

namespace detail {

// Godunov update for |grad u| = 1 from per-axis minimal neighbor values.
inline double eikonal_update(double a, double b, double c, double h) {
  double v[3] = {a, b, c};
  std::sort(v, v + 3);
  double t = v[0] + h;
  if (t > v[1]) {
    const double s = v[0] + v[1];
    t = 0.5 * (s + std::sqrt(std::max(0.0, 2.0 * h * h - (v[0] - v[1]) * (v[0] - v[1]))));
    if (t > v[2]) {
      const double q = v[0] + v[1] + v[2];
      const double disc = q * q - 3.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - h * h);
      t = (q + std::sqrt(std::max(0.0, disc))) / 3.0;
    }
  }
  return t;
}

} // namespace detail

/// Fast-sweeping reinitialization toward |grad phi| = 1. Vertices next to the
/// interface are rescaled by the local gradient magnitude and frozen, so the
/// zero level moves by at most one cell; `sweeps` counts full passes over the
/// eight sweep orderings.
inline LevelSetField reinitialize(const LevelSetField& ls, int sweeps = 3) {
  const Mesh& mesh = *ls.mesh;
  const int n = mesh.nb + 1;
  const double h = 1.0 / mesh.nb;
  const double inf = std::numeric_limits<double>::infinity();
  const auto idx = [&](int i, int j, int k) { return mesh.b_vertex_index(i, j, k); };

  std::vector<std::int8_t> sign(mesh.b_vertex_count());
  for (int v = 0; v < mesh.b_vertex_count(); ++v)
    sign[v] = (ls.phi[v] > 0.0) - (ls.phi[v] < 0.0);

  // Frozen band: any 6-neighbor with opposite sign (or an exactly-zero vertex).
  std::vector<std::uint8_t> frozen(mesh.b_vertex_count(), 0);
  bool any_frozen = false;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int v = idx(i, j, k);
        if (sign[v] == 0) {
          frozen[v] = 1;
          any_frozen = true;
          continue;
        }
        const int c[3] = {i, j, k};
        for (int a = 0; a < 3 && !frozen[v]; ++a)
          for (int d = -1; d <= 1; d += 2) {
            int w[3] = {i, j, k};
            w[a] = c[a] + d;
            if (w[a] < 0 || w[a] >= n) continue;
            if (sign[idx(w[0], w[1], w[2])] * sign[v] < 0) {
              frozen[v] = 1;
              any_frozen = true;
              break;
            }
          }
      }
  if (!any_frozen) return ls; // single-sign field: nothing to anchor on

  VecX u(mesh.b_vertex_count());
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int v = idx(i, j, k);
        if (!frozen[v]) {
          u[v] = inf;
          continue;
        }
        // local distance estimate |phi| / |grad phi| (central differences)
        Vec3 g = Vec3::Zero();
        const int c[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          const int lo = std::max(0, c[a] - 1), hi = std::min(n - 1, c[a] + 1);
          int pl[3] = {i, j, k}, ph[3] = {i, j, k};
          pl[a] = lo;
          ph[a] = hi;
          g[a] = (ls.phi[idx(ph[0], ph[1], ph[2])] - ls.phi[idx(pl[0], pl[1], pl[2])]) /
                 (h * (hi - lo));
        }
        u[v] = std::abs(ls.phi[v]) / std::max(g.norm(), 1e-12);
      }

  for (int pass = 0; pass < sweeps; ++pass) {
    for (int ord = 0; ord < 8; ++ord) {
      const int di = (ord & 1) ? -1 : 1;
      const int dj = (ord & 2) ? -1 : 1;
      const int dk = (ord & 4) ? -1 : 1;
      for (int k = (dk > 0 ? 0 : n - 1); k >= 0 && k < n; k += dk)
        for (int j = (dj > 0 ? 0 : n - 1); j >= 0 && j < n; j += dj)
          for (int i = (di > 0 ? 0 : n - 1); i >= 0 && i < n; i += di) {
            const int v = idx(i, j, k);
            if (frozen[v]) continue;
            const int c[3] = {i, j, k};
            double nb[3];
            for (int a = 0; a < 3; ++a) {
              double best = inf;
              for (int d = -1; d <= 1; d += 2) {
                int w[3] = {i, j, k};
                w[a] = c[a] + d;
                if (w[a] < 0 || w[a] >= n) continue;
                best = std::min(best, u[idx(w[0], w[1], w[2])]);
              }
              nb[a] = best;
            }
            const double t = detail::eikonal_update(nb[0], nb[1], nb[2], h);
            u[v] = std::min(u[v], t);
          }
    }
  }

  LevelSetField out(mesh);
  for (int v = 0; v < mesh.b_vertex_count(); ++v)
    out.phi[v] = (sign[v] == 0) ? 0.0 : sign[v] * u[v];
  return out;
}

} // namespace hts
