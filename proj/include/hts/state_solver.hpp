// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hts/fem.hpp"
#include "hts/fields.hpp"
#include "hts/level_set.hpp"
#include "hts/linear_solver.hpp"
#include "hts/problem.hpp"
#include "hts/regularization.hpp"

namespace hts {

/// Per-cell constant pullback data of T_t = id + t*theta: DT_t^{-T} and
/// xi = det DT_t. Identity outside the support of theta.
struct TransformData {
  bool identity = true;
  std::vector<Mat3> dt;     // DT_t per cell
  std::vector<Mat3> dtinvT; // DT_t^{-T} per cell
  std::vector<double> xi;   // det DT_t per cell

  Mat3 DT(int c) const { return identity ? Mat3(Mat3::Identity()) : dt[c]; }
  Mat3 P(int c) const { return identity ? Mat3(Mat3::Identity()) : dtinvT[c]; }
  double det(int c) const { return identity ? 1.0 : xi[c]; }
  Vec3 map(int c, const Vec3& x, const VertexVectorField* theta, double t,
           const Eigen::Vector4d& bary) const {
    if (identity || theta == nullptr) return x;
    return x + t * theta->value(c, bary);
  }
};

inline TransformData make_transform(const Mesh& mesh, const VertexVectorField& theta, double t) {
  TransformData tf;
  tf.identity = false;
  tf.dt.assign(mesh.n_cells(), Mat3::Identity());
  tf.dtinvT.assign(mesh.n_cells(), Mat3::Identity());
  tf.xi.assign(mesh.n_cells(), 1.0);
  for (int c : mesh.cells_inside_b()) {
    const CellBasis b = cell_basis(mesh, c);
    const Mat3 DT = Mat3::Identity() + t * theta.jacobian(c, b);
    const double det = DT.determinant();
    if (det <= 0.0)
      throw std::runtime_error("make_transform: det(DT_t) <= 0 on a cell; t too large");
    tf.dt[c] = DT;
    tf.dtinvT[c] = DT.inverse().transpose();
    tf.xi[c] = det;
  }
  return tf;
}

/// Discretization of the (possibly pulled-back) penalized state equation:
/// linear operator from the transformed material tensors, mapped load, and
/// the omega indicator fixed on the reference mesh.
struct StateProblem {
  const Mesh* mesh = nullptr;
  const ProblemData* data = nullptr;
  TetQuadrature quad;
  QuadIndicator chi;
  TransformData tf;
  const VertexVectorField* theta = nullptr; // non-null only for pulled-back problems
  double t = 0.0;
  SpMat A;
  VecX load;

  PenaltyParams penalty() const { return data->penalty; }

  Vec3 mapped_point(int c, int q, const Vec3& x) const {
    return tf.map(c, x, theta, t, quad.points[q]);
  }

  /// Nonlinear part of the residual: int_omega xi DT^{-1} Lambda(DT^{-T} E) . phi_i.
  VecX nonlinear_term(const EdgeField& E, const PenaltyParams& pen) const {
    return assemble_weighted_vector(
        *mesh, chi,
        [&](int c, int q, const Vec3&) -> Vec3 {
          const CellBasis b = cell_basis(*mesh, c);
          const Mat3 P = tf.P(c);
          const Vec3 e = P * E.value(c, b, quad.points[q]);
          return tf.det(c) * P.transpose() * lambda_gamma(pen, e);
        },
        quad);
  }

  VecX residual(const EdgeField& E, const PenaltyParams& pen) const {
    return A * E.dof + nonlinear_term(E, pen) - load;
  }

  VecX residual(const EdgeField& E) const { return residual(E, penalty()); }

  /// Newton Jacobian A + W(E) with W(i,j) = int_omega xi psi(DT^{-T}E)
  /// (DT^{-T} phi_i) . (DT^{-T} phi_j).
  SpMat jacobian(const EdgeField& E, const PenaltyParams& pen) const {
    const SpMat W = assemble_weighted_matrix(
        *mesh, chi,
        [&](int c, int q, const Vec3&) -> Mat3 {
          const CellBasis b = cell_basis(*mesh, c);
          const Mat3 P = tf.P(c);
          const Vec3 e = P * E.value(c, b, quad.points[q]);
          return tf.det(c) * P.transpose() * psi_gamma(pen, e).transpose() * P;
        },
        quad);
    return A + W;
  }

  SpMat jacobian(const EdgeField& E) const { return jacobian(E, penalty()); }

  /// System matrix of the adjoint equation; equals jacobian(E) transposed.
  SpMat adjoint_matrix(const EdgeField& E) const {
    const PenaltyParams pen = penalty();
    const SpMat W = assemble_weighted_matrix(
        *mesh, chi,
        [&](int c, int q, const Vec3&) -> Mat3 {
          const CellBasis b = cell_basis(*mesh, c);
          const Mat3 P = tf.P(c);
          const Vec3 e = P * E.value(c, b, quad.points[q]);
          return tf.det(c) * P.transpose() * psi_gamma(pen, e) * P;
        },
        quad);
    return A + W;
  }
};

/// Plain state problem (t = 0): A from nu/eps, load from the coil source.
inline StateProblem make_state_problem(const ProblemData& data, const QuadIndicator& chi,
                                       const TetQuadrature& quad) {
  StateProblem sp;
  sp.mesh = data.mesh;
  sp.data = &data;
  sp.quad = quad;
  sp.chi = chi;
  sp.A = assemble_curl_curl_mass(*data.mesh, data.nu, data.eps, quad);
  sp.load = assemble_load(*data.mesh, [&data](const Vec3& x) { return data.source(x); }, quad);
  return sp;
}

/// Pulled-back problem on the fixed mesh: tensors M1 = xi^-1 DT^T nu(T) DT,
/// M2 = xi DT^-1 eps(T) DT^-T and mapped load xi DT^-1 f(T). chi stays fixed
/// on the reference mesh.
inline StateProblem make_pullback_problem(const ProblemData& data, const QuadIndicator& chi,
                                          const TetQuadrature& quad,
                                          const VertexVectorField& theta, double t) {
  StateProblem sp;
  sp.mesh = data.mesh;
  sp.data = &data;
  sp.quad = quad;
  sp.chi = chi;
  sp.theta = &theta;
  sp.t = t;
  sp.tf = make_transform(*data.mesh, theta, t);
  const Mesh& mesh = *data.mesh;
  sp.A = assemble_curl_curl_mass_cw(
      mesh,
      [&](int c, int q, const Vec3& x) -> Mat3 {
        const Mat3 DT = sp.tf.DT(c);
        const Vec3 y = sp.mapped_point(c, q, x);
        return (1.0 / sp.tf.det(c)) * DT.transpose() * data.nu(y) * DT;
      },
      [&](int c, int q, const Vec3& x) -> Mat3 {
        const Mat3 P = sp.tf.P(c);
        const Vec3 y = sp.mapped_point(c, q, x);
        return sp.tf.det(c) * P.transpose() * data.eps(y) * P;
      },
      quad);
  sp.load = assemble_load_cw(
      mesh,
      [&](int c, int q, const Vec3& x) -> Vec3 {
        const Mat3 P = sp.tf.P(c);
        const Vec3 y = sp.mapped_point(c, q, x);
        return sp.tf.det(c) * P.transpose() * data.source(y);
      },
      quad);
  return sp;
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 20; // Armijo halving; minimum step 2^-20
  bool gamma_continuation = false;
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  int damping_steps = 0;
};

/// Damped Newton on the penalized dual formulation. The factorization
/// pattern is analyzed once and refactorized per step.
class NewtonSolver {
 public:
  explicit NewtonSolver(const StateProblem& sp) : sp_(&sp) {}

  std::pair<EdgeField, NewtonReport> solve(const EdgeField& initial, const NewtonOptions& opt) {
    if (opt.tol <= 0.0) throw std::invalid_argument("NewtonSolver: tol must be positive");
    EdgeField E = initial;
    NewtonReport rep;
    if (opt.gamma_continuation) {
      const PenaltyParams target = sp_->penalty();
      for (double f : {100.0, 10.0}) {
        NewtonReport sub;
        E = run(E, PenaltyParams(target.gamma / f, target.j_c), opt, sub);
      }
    }
    E = run(E, sp_->penalty(), opt, rep);
    return {std::move(E), std::move(rep)};
  }

  /// Solve the adjoint system (the Jacobian transpose) at the given state.
  VecX solve_adjoint_at(const EdgeField& E, const VecX& rhs) {
    factorize(sp_->adjoint_matrix(E));
    return solver_.solve(rhs);
  }

 private:
  EdgeField run(EdgeField E, const PenaltyParams& pen, const NewtonOptions& opt,
                NewtonReport& rep) {
    VecX r = sp_->residual(E, pen);
    double rnorm = r.norm();
    rep.residual_history.push_back(rnorm);
    for (int it = 0; it < opt.max_iter && rnorm > opt.tol; ++it) {
      factorize(sp_->jacobian(E, pen));
      const VecX delta = solver_.solve(-r);
      if (solver_.info() != Eigen::Success)
        throw std::runtime_error("NewtonSolver: linear solve failed");
      double s = 1.0;
      EdgeField Enew = E;
      VecX rnew;
      double rnew_norm = 0.0;
      for (int half = 0;; ++half) {
        Enew.dof = E.dof + s * delta;
        rnew = sp_->residual(Enew, pen);
        rnew_norm = rnew.norm();
        if (rnew_norm <= (1.0 - 1e-4 * s) * rnorm) break;
        if (half >= opt.max_halvings) break; // take the minimum step regardless
        s *= 0.5;
        ++rep.damping_steps;
      }
      E = std::move(Enew);
      r = std::move(rnew);
      rnorm = rnew_norm;
      rep.residual_history.push_back(rnorm);
      ++rep.iterations;
    }
    rep.converged = rnorm <= opt.tol;
    return E;
  }

  void factorize(const SpMat& J) {
    if (!analyzed_) {
      solver_.analyzePattern(J);
      analyzed_ = true;
    }
    solver_.factorize(J);
    if (solver_.info() != Eigen::Success)
      throw std::runtime_error("NewtonSolver: singular factorization");
  }

  const StateProblem* sp_;
  DirectSolver solver_;
  bool analyzed_ = false;
};

inline std::pair<EdgeField, NewtonReport> newton_solve(const StateProblem& sp,
                                                       const EdgeField& initial,
                                                       const NewtonOptions& opt = {}) {
  NewtonSolver solver(sp);
  return solver.solve(initial, opt);
}

/// lambda^gamma = Lambda_gamma(E) on omega-flagged quadrature points, zero
/// extension elsewhere; stored per (cell, q) for cells inside B.
struct MultiplierField {
  std::vector<int> cells; // cells inside B
  int nq = 0;
  std::vector<Vec3> lam;  // cells.size() * nq

  const Vec3& at(std::size_t local_cell, int q) const { return lam[local_cell * nq + q]; }
};

inline MultiplierField multiplier(const EdgeField& E, const ProblemData& data,
                                  const QuadIndicator& chi, const TetQuadrature& quad) {
  const Mesh& mesh = *data.mesh;
  MultiplierField out;
  out.cells = mesh.cells_inside_b();
  out.nq = static_cast<int>(quad.size());
  out.lam.assign(out.cells.size() * quad.size(), Vec3::Zero());
  for (std::size_t lc = 0; lc < out.cells.size(); ++lc) {
    const int c = out.cells[lc];
    const CellBasis b = cell_basis(mesh, c);
    for (int q = 0; q < out.nq; ++q)
      if (chi(c, q))
        out.lam[lc * out.nq + q] = lambda_gamma(data.penalty, E.value(c, b, quad.points[q]));
  }
  return out;
}

/// c(gamma) = int_omega | lambda . E - j_c |E| | dx.
inline double complementarity_residual(const EdgeField& E, const ProblemData& data,
                                       const QuadIndicator& chi, const TetQuadrature& quad) {
  const Mesh& mesh = *data.mesh;
  double s = 0.0;
  for (int c : mesh.cells_inside_b()) {
    const CellBasis b = cell_basis(mesh, c);
    const double scale = 6.0 * b.volume;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      if (!chi(c, static_cast<int>(q))) continue;
      const Vec3 e = E.value(c, b, quad.points[q]);
      const Vec3 lam = lambda_gamma(data.penalty, e);
      s += quad.weights[q] * scale * std::abs(lam.dot(e) - data.penalty.j_c * e.norm());
    }
  }
  return s;
}

/// Example 2: the target E_d is the state solution for the ball omega_b.
inline ProblemData build_example2(const Mesh& mesh, double gamma = 7e4, double j_c = 1.0,
                                  int quad_degree = 2, const NewtonOptions& opt = {}) {
  ProblemData d = build_example1(mesh, gamma, j_c);
  const TetQuadrature quad = tet_quadrature(quad_degree);
  ShapeSpec ball;
  ball.kind = ShapeSpec::Kind::Ball;
  ball.center = Vec3(0.5, 0.5, 0.5);
  ball.radius = 0.5;
  LevelSetField phi = init_shape(ball, mesh);
  const QuadIndicator chi = indicator(phi, quad);
  const StateProblem sp = make_state_problem(d, chi, quad);
  auto [E, rep] = newton_solve(sp, EdgeField(mesh), opt);
  if (!rep.converged) throw std::runtime_error("build_example2: target state solve failed");
  d.target_kind = TargetKind::Ball;
  d.E_d = std::move(E);
  return d;
}

} // namespace hts
