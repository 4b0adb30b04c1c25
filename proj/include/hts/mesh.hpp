// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hts/quadrature.hpp"
#include "hts/types.hpp"

namespace hts {

enum class Region : std::uint8_t { Outside = 0, InsideB = 1, Coil = 2 };

/// Local edge ordering of a tetrahedron (pairs of local vertex numbers).
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Conforming tetrahedral mesh of the box Omega = [-2,3]^3 with the unit box
/// B = [0,1]^3 resolved exactly by grid planes. Each grid hexahedron is split
/// into six tetrahedra sharing the main diagonal (Kuhn subdivision), so the
/// mesh is conforming for any tensor grid. Edges carry a global orientation
/// from the lower to the higher vertex index.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> cells; // positively oriented
  std::vector<std::array<int, 2>> edges; // global: first < second
  // Signed edge references: value = sign * (edge_index + 1).
  std::vector<std::array<int, 6>> cell_edges;
  std::vector<bool> boundary_edge; // true if the edge lies on the boundary of Omega
  std::vector<Region> region;      // per cell

  // Tensor grid data (breakpoints per axis; identical for all three axes).
  std::vector<double> axis;
  int nx = 0;     // cells per axis
  int b_lo = 0;   // axis index of the plane x = 0
  int nb = 0;     // cells per axis inside B

  // Interior-edge DoF numbering (-1 for boundary edges).
  std::vector<int> edge_dof;
  int n_dof = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  int vertex_index(int i, int j, int k) const {
    const int nv = nx + 1;
    return (k * nv + j) * nv + i;
  }

  Vec3 centroid(int c) const {
    const auto& t = cells[c];
    return 0.25 * (vertices[t[0]] + vertices[t[1]] + vertices[t[2]] + vertices[t[3]]);
  }

  double cell_volume(int c) const {
    const auto& t = cells[c];
    const Vec3 a = vertices[t[1]] - vertices[t[0]];
    const Vec3 b = vertices[t[2]] - vertices[t[0]];
    const Vec3 d = vertices[t[3]] - vertices[t[0]];
    return a.cross(b).dot(d) / 6.0;
  }

  Vec3 point_at(int c, const Eigen::Vector4d& bary) const {
    const auto& t = cells[c];
    return bary[0] * vertices[t[0]] + bary[1] * vertices[t[1]] + bary[2] * vertices[t[2]] +
           bary[3] * vertices[t[3]];
  }

  /// Barycentric coordinates of p with respect to cell c.
  Eigen::Vector4d barycentric(int c, const Vec3& p) const {
    const auto& t = cells[c];
    Eigen::Matrix3d M;
    M.col(0) = vertices[t[1]] - vertices[t[0]];
    M.col(1) = vertices[t[2]] - vertices[t[0]];
    M.col(2) = vertices[t[3]] - vertices[t[0]];
    const Vec3 loc = M.inverse() * (p - vertices[t[0]]);
    return Eigen::Vector4d(1.0 - loc.sum(), loc[0], loc[1], loc[2]);
  }

  /// Grid interval containing x along one axis (clamped to valid range).
  int axis_interval(double x) const {
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    int i = static_cast<int>(it - axis.begin()) - 1;
    return std::clamp(i, 0, nx - 1);
  }

  /// Locate the cell containing p; returns cell index, sets barycentric coords.
  int locate(const Vec3& p, Eigen::Vector4d& bary) const {
    const int ix = axis_interval(p.x());
    const int iy = axis_interval(p.y());
    const int iz = axis_interval(p.z());
    const int hex = (iz * nx + iy) * nx + ix;
    int best = -1;
    double best_min = -1e30;
    for (int s = 0; s < 6; ++s) {
      const int c = 6 * hex + s;
      const Eigen::Vector4d b = barycentric(c, p);
      const double m = b.minCoeff();
      if (m > best_min) {
        best_min = m;
        best = c;
        bary = b;
      }
    }
    if (best_min < -1e-9)
      throw std::runtime_error("Mesh::locate: point outside the located hex");
    return best;
  }

  bool on_domain_boundary(const Vec3& p) const {
    const double lo = axis.front(), hi = axis.back();
    const double tol = 1e-12;
    for (int a = 0; a < 3; ++a)
      if (std::abs(p[a] - lo) < tol || std::abs(p[a] - hi) < tol) return true;
    return false;
  }

  // B sub-lattice: vertex (i,j,k) of the (nb+1)^3 grid over [0,1]^3.
  int b_vertex_count() const { return (nb + 1) * (nb + 1) * (nb + 1); }

  int b_vertex_index(int i, int j, int k) const {
    const int n = nb + 1;
    return (k * n + j) * n + i;
  }

  Vec3 b_vertex_coord(int bi) const {
    const int n = nb + 1;
    const int i = bi % n, j = (bi / n) % n, k = bi / (n * n);
    const double h = 1.0 / nb;
    return Vec3(i * h, j * h, k * h);
  }

  /// Map a global mesh vertex to its B-lattice index, or -1 if outside B.
  int global_to_b_vertex(int v) const {
    const int nv = nx + 1;
    const int i = v % nv, j = (v / nv) % nv, k = v / (nv * nv);
    const int bi = i - b_lo, bj = j - b_lo, bk = k - b_lo;
    if (bi < 0 || bj < 0 || bk < 0 || bi > nb || bj > nb || bk > nb) return -1;
    return b_vertex_index(bi, bj, bk);
  }

  /// Cells tagged InsideB, in ascending order.
  std::vector<int> cells_inside_b() const {
    std::vector<int> out;
    for (int c = 0; c < n_cells(); ++c)
      if (region[c] == Region::InsideB) out.push_back(c);
    return out;
  }
};

namespace detail {

inline void append_axis(std::vector<double>& pts, double a, double b, int n) {
  for (int i = 1; i <= n; ++i) pts.push_back(a + (b - a) * i / n);
}

} // namespace detail

/// Build the structured mesh: n_omega cells per axis over Omega outside B
/// (n_omega/5 per unit length), n_b cells per axis over B. Requires
/// n_omega % 5 == 0 so that grid planes align with the faces of B; the coil's
/// z-extent coincides with those planes.
inline Mesh build_box_mesh(int n_omega, int n_b) {
  if (n_omega < 2 || n_b < 1)
    throw std::invalid_argument("build_box_mesh: need n_omega >= 2 and n_b >= 1");
  if (n_omega % 5 != 0)
    throw std::invalid_argument(
        "build_box_mesh: n_omega must be a multiple of 5 so a grid plane lies on each face "
        "of B = [0,1]^3 (Omega spans 5 units per axis)");

  Mesh m;
  const int side = n_omega / 5;
  m.axis.push_back(-2.0);
  detail::append_axis(m.axis, -2.0, 0.0, 2 * side);
  m.b_lo = static_cast<int>(m.axis.size()) - 1;
  detail::append_axis(m.axis, 0.0, 1.0, n_b);
  detail::append_axis(m.axis, 1.0, 3.0, 2 * side);
  m.axis[m.b_lo] = 0.0;             // exact plane
  m.axis[m.b_lo + n_b] = 1.0;       // exact plane
  m.nx = static_cast<int>(m.axis.size()) - 1;
  m.nb = n_b;

  const int nv = m.nx + 1;
  m.vertices.reserve(static_cast<std::size_t>(nv) * nv * nv);
  for (int k = 0; k < nv; ++k)
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nv; ++i) m.vertices.emplace_back(m.axis[i], m.axis[j], m.axis[k]);

  // Kuhn subdivision: the six tets of a hex are the chains corner->corner
  // along the axis permutations, all sharing the main diagonal.
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  m.cells.reserve(static_cast<std::size_t>(m.nx) * m.nx * m.nx * 6);
  for (int k = 0; k < m.nx; ++k)
    for (int j = 0; j < m.nx; ++j)
      for (int i = 0; i < m.nx; ++i) {
        for (const auto& perm : kPerms) {
          std::array<int, 3> d = {0, 0, 0};
          std::array<int, 4> tet;
          tet[0] = m.vertex_index(i, j, k);
          for (int s = 0; s < 3; ++s) {
            d[perm[s]] = 1;
            tet[s + 1] = m.vertex_index(i + d[0], j + d[1], k + d[2]);
          }
          // enforce positive orientation
          const Vec3 a = m.vertices[tet[1]] - m.vertices[tet[0]];
          const Vec3 b = m.vertices[tet[2]] - m.vertices[tet[0]];
          const Vec3 c = m.vertices[tet[3]] - m.vertices[tet[0]];
          if (a.cross(b).dot(c) < 0.0) std::swap(tet[2], tet[3]);
          m.cells.push_back(tet);
        }
      }

  // Global edges, oriented low -> high vertex index.
  std::unordered_map<std::int64_t, int> edge_ids;
  edge_ids.reserve(m.cells.size() * 4);
  m.cell_edges.resize(m.cells.size());
  const auto key = [nv](int a, int b) {
    return static_cast<std::int64_t>(a) * (static_cast<std::int64_t>(nv) * nv * nv) + b;
  };
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    for (int e = 0; e < 6; ++e) {
      int va = m.cells[c][kTetEdges[e][0]];
      int vb = m.cells[c][kTetEdges[e][1]];
      const int sign = (va < vb) ? 1 : -1;
      if (va > vb) std::swap(va, vb);
      auto [it, inserted] = edge_ids.try_emplace(key(va, vb), static_cast<int>(m.edges.size()));
      if (inserted) m.edges.push_back({va, vb});
      m.cell_edges[c][e] = sign * (it->second + 1);
    }
  }

  // Boundary edges: both endpoints and the midpoint on the boundary of Omega.
  m.boundary_edge.assign(m.edges.size(), false);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const Vec3& a = m.vertices[m.edges[e][0]];
    const Vec3& b = m.vertices[m.edges[e][1]];
    m.boundary_edge[e] =
        m.on_domain_boundary(a) && m.on_domain_boundary(b) && m.on_domain_boundary(0.5 * (a + b));
  }
  m.edge_dof.assign(m.edges.size(), -1);
  int dof = 0;
  for (std::size_t e = 0; e < m.edges.size(); ++e)
    if (!m.boundary_edge[e]) m.edge_dof[e] = dof++;
  m.n_dof = dof;

  // Region tags: B by exact centroid membership (grid-aligned).
  m.region.assign(m.cells.size(), Region::Outside);
  for (int c = 0; c < m.n_cells(); ++c) {
    const Vec3 g = m.centroid(c);
    if (g.x() > 0.0 && g.x() < 1.0 && g.y() > 0.0 && g.y() < 1.0 && g.z() > 0.0 && g.z() < 1.0)
      m.region[c] = Region::InsideB;
  }
  return m;
}

inline bool in_coil(const Vec3& p) {
  const double r = std::sqrt((p.x() - 0.5) * (p.x() - 0.5) + (p.y() - 0.5) * (p.y() - 0.5));
  return std::abs(p.z() - 0.5) <= 0.5 && r >= 1.2 && r <= 1.6;
}

/// Tag the pipe coil Omega_p by cell centroid. Cells inside B are never
/// retagged (the coil is disjoint from B).
inline Mesh tag_coil(Mesh mesh) {
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (mesh.region[c] == Region::InsideB) continue;
    if (in_coil(mesh.centroid(c))) mesh.region[c] = Region::Coil;
  }
  return mesh;
}

/// Convenience: the standard tagged mesh.
inline Mesh make_mesh(int n_omega, int n_b) { return tag_coil(build_box_mesh(n_omega, n_b)); }

} // namespace hts
