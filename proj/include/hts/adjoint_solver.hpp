// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hts/state_solver.hpp"

namespace hts {

/// Right-hand side of the adjoint equation: -int_B kappa (E - E_d) . phi_i.
inline VecX adjoint_rhs(const StateProblem& sp, const EdgeField& E) {
  const Mesh& mesh = *sp.mesh;
  const ProblemData& data = *sp.data;
  return assemble_load_cw(
      mesh,
      [&](int c, int q, const Vec3& x) -> Vec3 {
        if (mesh.region[c] != Region::InsideB) return Vec3::Zero();
        const CellBasis b = cell_basis(mesh, c);
        const Vec3 e = E.value(c, b, sp.quad.points[q]);
        const Vec3 ed = data.target(c, b, sp.quad.points[q]);
        return -data.kappa(x) * (e - ed);
      },
      sp.quad);
}

/// Solve a(ehat, P) + int_omega psi(E) P . ehat = -int_B kappa (E - E_d) . ehat
/// for all test functions. The system matrix is the transpose of the Newton
/// Jacobian at E.
inline EdgeField adjoint_solve(const StateProblem& sp, const EdgeField& E) {
  NewtonSolver solver(sp);
  EdgeField P(*sp.mesh);
  P.dof = solver.solve_adjoint_at(E, adjoint_rhs(sp, E));
  return P;
}

} // namespace hts
