// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCholesky>
#include <stdexcept>
#include <vector>

#include "hts/fields.hpp"
#include "hts/shape_derivative.hpp"

namespace hts {

struct DescentParams {
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  double alpha3 = 1.0;
  // Theory mode: zero Dirichlet values on the boundary of B instead of the
  // normal-trace penalty (needed where compact support is required).
  bool strict_zero_boundary = false;

  void validate() const {
    if (alpha1 <= 0.0 || alpha2 <= 0.0 || alpha3 < 0.0)
      throw std::invalid_argument("DescentParams: need alpha1, alpha2 > 0 and alpha3 >= 0");
  }
};

/// Shape-derivative pairing int_B S1 : Dtheta + S0 . theta without the
/// compact-support precondition (used for fields carrying boundary values,
/// e.g. penalty-mode descent directions).
inline double density_pairing(const ShapeGradientDensity& den, const VertexVectorField& theta) {
  const Mesh& mesh = *den.mesh;
  double s = 0.0;
  std::size_t idx = 0;
  for (int c : den.cells) {
    const CellBasis b = cell_basis(mesh, c);
    const Mat3 Dth = theta.jacobian(c, b);
    for (int q = 0; q < den.nq; ++q, ++idx) {
      s += den.wq[idx] * den.S1[idx].cwiseProduct(Dth).sum();
      if (!den.S0[idx].isZero())
        s += den.wq[idx] * den.S0[idx].dot(theta.value(c, den.quad.points[q]));
    }
  }
  return s;
}

namespace detail {

// Boundary faces of the B submesh: local face k of a tet is opposite local
// vertex k; a face lies on dB when its three vertices share a bounding plane.
struct BoundaryFace {
  std::array<int, 3> bv; // B-lattice vertex indices
  double area = 0.0;
  int axis = 0; // outward normal is +/- e_axis
};

inline std::vector<BoundaryFace> b_boundary_faces(const Mesh& mesh) {
  std::vector<BoundaryFace> out;
  static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (int c : mesh.cells_inside_b()) {
    for (const auto& f : kFace) {
      std::array<int, 3> gv = {mesh.cells[c][f[0]], mesh.cells[c][f[1]], mesh.cells[c][f[2]]};
      for (int axis = 0; axis < 3; ++axis) {
        for (double plane : {0.0, 1.0}) {
          bool on = true;
          for (int a : gv) on = on && std::abs(mesh.vertices[a][axis] - plane) < 1e-12;
          if (!on) continue;
          BoundaryFace bf;
          for (int i = 0; i < 3; ++i) bf.bv[i] = mesh.global_to_b_vertex(gv[i]);
          const Vec3 e1 = mesh.vertices[gv[1]] - mesh.vertices[gv[0]];
          const Vec3 e2 = mesh.vertices[gv[2]] - mesh.vertices[gv[0]];
          bf.area = 0.5 * e1.cross(e2).norm();
          bf.axis = axis;
          out.push_back(bf);
        }
      }
    }
  }
  return out;
}

inline bool b_boundary_vertex(const Mesh& mesh, int bv) {
  const int n = mesh.nb + 1;
  const int i = bv % n, j = (bv / n) % n, k = bv / (n * n);
  return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
}

} // namespace detail

/// Assemble the SPD form B(Theta, xi) = int_B alpha1 DTheta : Dxi
/// + alpha2 Theta . xi dx + alpha3 int_dB (Theta.n)(xi.n) ds on the P1 vector
/// space over B (3 DoFs per lattice vertex).
inline SpMat assemble_descent_form(const Mesh& mesh, const DescentParams& par) {
  par.validate();
  const int n_dof = 3 * mesh.b_vertex_count();
  std::vector<Triplet> trip;
  for (int c : mesh.cells_inside_b()) {
    const CellBasis b = cell_basis(mesh, c);
    const double V = b.volume;
    std::array<int, 4> bv;
    for (int a = 0; a < 4; ++a) bv[a] = mesh.global_to_b_vertex(mesh.cells[c][a]);
    for (int a = 0; a < 4; ++a)
      for (int d = 0; d < 4; ++d) {
        const double stiff = par.alpha1 * V * b.grad_lambda[a].dot(b.grad_lambda[d]);
        const double mass = par.alpha2 * V * ((a == d) ? 0.1 : 0.05);
        for (int k = 0; k < 3; ++k)
          trip.emplace_back(3 * bv[a] + k, 3 * bv[d] + k, stiff + mass);
      }
  }
  if (!par.strict_zero_boundary && par.alpha3 > 0.0) {
    for (const auto& f : detail::b_boundary_faces(mesh)) {
      for (int a = 0; a < 3; ++a)
        for (int d = 0; d < 3; ++d) {
          const double m = par.alpha3 * f.area * ((a == d) ? 1.0 / 6.0 : 1.0 / 12.0);
          trip.emplace_back(3 * f.bv[a] + f.axis, 3 * f.bv[d] + f.axis, m);
        }
    }
  }
  SpMat M(n_dof, n_dof);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// B(theta1, theta2) evaluated exactly (P1 integrals are closed-form).
inline double descent_form_value(const Mesh& mesh, const DescentParams& par,
                                 const VertexVectorField& t1, const VertexVectorField& t2) {
  const SpMat M = assemble_descent_form(mesh, par);
  VecX x1(M.rows()), x2(M.rows());
  for (int v = 0; v < mesh.b_vertex_count(); ++v)
    for (int k = 0; k < 3; ++k) {
      x1[3 * v + k] = t1.v[v][k];
      x2[3 * v + k] = t2.v[v][k];
    }
  return x1.dot(M * x2);
}

/// Hilbertian descent direction: B(Theta, xi) = -dJ(xi) for all P1 fields xi.
inline VertexVectorField solve_descent(const ShapeGradientDensity& den, const DescentParams& par,
                                       const Mesh& mesh) {
  par.validate();
  SpMat M = assemble_descent_form(mesh, par);
  VecX rhs = VecX::Zero(M.rows());
  // rhs[(v,k)] = -dJ(hat_{v,k}) assembled cell-wise from the density
  std::size_t idx = 0;
  for (std::size_t lc = 0; lc < den.cells.size(); ++lc) {
    const int c = den.cells[lc];
    const CellBasis b = cell_basis(mesh, c);
    std::array<int, 4> bv;
    for (int a = 0; a < 4; ++a) bv[a] = mesh.global_to_b_vertex(mesh.cells[c][a]);
    for (int q = 0; q < den.nq; ++q, ++idx) {
      const Mat3& S1 = den.S1[idx];
      const Vec3& S0 = den.S0[idx];
      const double w = den.wq[idx];
      for (int a = 0; a < 4; ++a)
        for (int k = 0; k < 3; ++k) {
          double v = S1.row(k).dot(b.grad_lambda[a]);
          v += S0[k] * den.quad.points[q][a];
          rhs[3 * bv[a] + k] -= w * v;
        }
    }
  }
  if (par.strict_zero_boundary) {
    // zero Dirichlet rows/columns on dB vertices
    for (int v = 0; v < mesh.b_vertex_count(); ++v) {
      if (!detail::b_boundary_vertex(mesh, v)) continue;
      for (int k = 0; k < 3; ++k) rhs[3 * v + k] = 0.0;
    }
    for (int outer = 0; outer < M.outerSize(); ++outer)
      for (SpMat::InnerIterator it(M, outer); it; ++it) {
        const bool rb = detail::b_boundary_vertex(mesh, static_cast<int>(it.row()) / 3);
        const bool cb = detail::b_boundary_vertex(mesh, static_cast<int>(it.col()) / 3);
        if (rb || cb) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
      }
  }
  Eigen::SimplicialLDLT<SpMat> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_descent: factorization failed");
  const VecX x = ldlt.solve(rhs);
  VertexVectorField theta(mesh);
  for (int v = 0; v < mesh.b_vertex_count(); ++v) theta.v[v] = Vec3(x[3 * v], x[3 * v + 1], x[3 * v + 2]);
  return theta;
}

enum class SymmetryPlane { XHalf, YHalf }; // x = 0.5 and y = 0.5

/// theta + DR_Q theta o R_Q for one reflection plane; the structured lattice
/// maps vertices to vertices exactly.
inline VertexVectorField symmetrize(const VertexVectorField& th, SymmetryPlane plane) {
  const Mesh& mesh = *th.mesh;
  const int n = mesh.nb + 1;
  const int axis = (plane == SymmetryPlane::XHalf) ? 0 : 1;
  VertexVectorField out(mesh);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int r[3] = {i, j, k};
        r[axis] = (n - 1) - r[axis];
        const int v = mesh.b_vertex_index(i, j, k);
        const int rv = mesh.b_vertex_index(r[0], r[1], r[2]);
        Vec3 refl = th.v[rv];
        refl[axis] = -refl[axis]; // DR_Q = diag with -1 on the reflected axis
        out.v[v] = th.v[v] + refl;
      }
  return out;
}

inline VertexVectorField symmetrize(const VertexVectorField& th,
                                    const std::vector<SymmetryPlane>& planes) {
  VertexVectorField out = th;
  for (SymmetryPlane p : planes) out = symmetrize(out, p);
  return out;
}

/// Residual of the symmetry relation theta o R_Q = DR_Q theta (max norm).
inline double symmetry_residual(const VertexVectorField& th, SymmetryPlane plane) {
  const Mesh& mesh = *th.mesh;
  const int n = mesh.nb + 1;
  const int axis = (plane == SymmetryPlane::XHalf) ? 0 : 1;
  double res = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int r[3] = {i, j, k};
        r[axis] = (n - 1) - r[axis];
        Vec3 dr = th.v[mesh.b_vertex_index(i, j, k)];
        dr[axis] = -dr[axis];
        res = std::max(res, (th.v[mesh.b_vertex_index(r[0], r[1], r[2])] - dr).norm());
      }
  return res;
}

} // namespace hts
