// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "hts/fem.hpp"
#include "hts/mesh.hpp"
#include "hts/types.hpp"

namespace hts {

/// Scalar per-vertex field on the B sub-lattice; omega = {phi < 0}.
struct LevelSetField {
  const Mesh* mesh = nullptr;
  VecX phi;

  LevelSetField() = default;
  explicit LevelSetField(const Mesh& m) : mesh(&m), phi(VecX::Zero(m.b_vertex_count())) {}
};

/// Piecewise-linear vector field on the B sub-lattice vertices.
struct VertexVectorField {
  const Mesh* mesh = nullptr;
  std::vector<Vec3> v;

  VertexVectorField() = default;
  explicit VertexVectorField(const Mesh& m)
      : mesh(&m), v(static_cast<std::size_t>(m.b_vertex_count()), Vec3::Zero()) {}

  double max_norm() const {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, x.norm());
    return m;
  }

  /// P1 interpolation at a barycentric point of a cell inside B.
  Vec3 value(int cell, const Eigen::Vector4d& bary) const {
    Vec3 out = Vec3::Zero();
    for (int a = 0; a < 4; ++a) {
      const int bv = mesh->global_to_b_vertex(mesh->cells[cell][a]);
      out += bary[a] * v[bv];
    }
    return out;
  }

  /// Constant Jacobian D theta on a cell inside B; rows = components.
  Mat3 jacobian(int cell, const CellBasis& b) const {
    Mat3 J = Mat3::Zero();
    for (int a = 0; a < 4; ++a) {
      const int bv = mesh->global_to_b_vertex(mesh->cells[cell][a]);
      J += v[bv] * b.grad_lambda[a].transpose();
    }
    return J;
  }

  /// True if the field vanishes on all vertices of the boundary of B.
  bool zero_on_b_boundary(double tol = 0.0) const {
    const int n = mesh->nb + 1;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const bool bdry = i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
          if (bdry && v[mesh->b_vertex_index(i, j, k)].norm() > tol) return false;
        }
    return true;
  }
};

} // namespace hts
