// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hts/mesh.hpp"
#include "hts/quadrature.hpp"
#include "hts/types.hpp"

namespace hts {

/// Per-cell geometry for P1/Whitney bases: gradients of the four barycentric
/// coordinates and the (positive) cell volume.
struct CellBasis {
  std::array<Vec3, 4> grad_lambda;
  double volume = 0.0;
};

inline CellBasis cell_basis(const Mesh& mesh, int c) {
  const auto& t = mesh.cells[c];
  Eigen::Matrix3d M;
  M.col(0) = mesh.vertices[t[1]] - mesh.vertices[t[0]];
  M.col(1) = mesh.vertices[t[2]] - mesh.vertices[t[0]];
  M.col(2) = mesh.vertices[t[3]] - mesh.vertices[t[0]];
  const Eigen::Matrix3d Minv = M.inverse();
  CellBasis b;
  b.volume = M.determinant() / 6.0;
  for (int i = 0; i < 3; ++i) b.grad_lambda[i + 1] = Minv.row(i);
  b.grad_lambda[0] = -(b.grad_lambda[1] + b.grad_lambda[2] + b.grad_lambda[3]);
  return b;
}

/// Whitney edge function of local edge e at barycentric point, in global
/// orientation (signless; the caller multiplies by the cell-edge sign).
inline Vec3 whitney_value(const CellBasis& b, int e, const Eigen::Vector4d& bary) {
  const int i = kTetEdges[e][0], j = kTetEdges[e][1];
  return bary[i] * b.grad_lambda[j] - bary[j] * b.grad_lambda[i];
}

/// curl of the Whitney function of local edge e (constant on the cell).
inline Vec3 whitney_curl(const CellBasis& b, int e) {
  const int i = kTetEdges[e][0], j = kTetEdges[e][1];
  return 2.0 * b.grad_lambda[i].cross(b.grad_lambda[j]);
}

/// Lowest-order Nedelec function in H0(curl): one DoF per interior edge
/// (tangential circulation), boundary-edge DoFs eliminated.
struct EdgeField {
  const Mesh* mesh = nullptr;
  VecX dof;

  EdgeField() = default;
  explicit EdgeField(const Mesh& m) : mesh(&m), dof(VecX::Zero(m.n_dof)) {}
  EdgeField(const Mesh& m, VecX values) : mesh(&m), dof(std::move(values)) {}

  /// Signed coefficients of the six Whitney functions in cell c.
  std::array<double, 6> cell_coeffs(int c) const {
    std::array<double, 6> out;
    for (int e = 0; e < 6; ++e) {
      const int se = mesh->cell_edges[c][e];
      const int edge = std::abs(se) - 1;
      const int d = mesh->edge_dof[edge];
      out[e] = (d < 0) ? 0.0 : ((se > 0) ? dof[d] : -dof[d]);
    }
    return out;
  }

  Vec3 value(int c, const CellBasis& b, const Eigen::Vector4d& bary) const {
    const auto coeff = cell_coeffs(c);
    Vec3 v = Vec3::Zero();
    for (int e = 0; e < 6; ++e)
      if (coeff[e] != 0.0) v += coeff[e] * whitney_value(b, e, bary);
    return v;
  }

  Vec3 curl(int c, const CellBasis& b) const {
    const auto coeff = cell_coeffs(c);
    Vec3 v = Vec3::Zero();
    for (int e = 0; e < 6; ++e)
      if (coeff[e] != 0.0) v += coeff[e] * whitney_curl(b, e);
    return v;
  }

  /// Jacobian of the field within cell c (constant, antisymmetric part only;
  /// Whitney fields are locally of the form a + b x x).
  Mat3 jacobian(int c, const CellBasis& b) const {
    const auto coeff = cell_coeffs(c);
    Mat3 J = Mat3::Zero();
    for (int e = 0; e < 6; ++e) {
      if (coeff[e] == 0.0) continue;
      const int i = kTetEdges[e][0], j = kTetEdges[e][1];
      J += coeff[e] * (b.grad_lambda[j] * b.grad_lambda[i].transpose() -
                       b.grad_lambda[i] * b.grad_lambda[j].transpose());
    }
    return J;
  }

  /// Point evaluation anywhere in Omega (cell search via the structured grid).
  Vec3 value_at(const Vec3& p) const {
    Eigen::Vector4d bary;
    const int c = mesh->locate(p, bary);
    return value(c, cell_basis(*mesh, c), bary);
  }
};

/// Sharp per-quadrature-point indicator of omega (1 inside, 0 outside),
/// stored for every cell of the mesh; nonzero only on cells inside B.
struct QuadIndicator {
  int nq = 0;
  std::vector<std::uint8_t> flags;

  QuadIndicator() = default;
  QuadIndicator(const Mesh& mesh, int n_quad_pts)
      : nq(n_quad_pts), flags(static_cast<std::size_t>(mesh.n_cells()) * n_quad_pts, 0) {}

  std::uint8_t operator()(int c, int q) const { return flags[static_cast<std::size_t>(c) * nq + q]; }
  std::uint8_t& at(int c, int q) { return flags[static_cast<std::size_t>(c) * nq + q]; }
};

namespace detail {

inline void check_spd_sample(const Mat3& K, const char* what) {
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(what) + ": coefficient sample not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(K, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    throw std::invalid_argument(std::string(what) + ": coefficient sample not positive semidefinite");
}

} // namespace detail

/// Discrete a(.,.): entries a(phi_j, phi_i) = int nu curl phi_j . curl phi_i
/// + eps phi_j . phi_i over interior-edge Whitney bases. Coefficients are
/// sampled per quadrature point and must be symmetric positive (semi)definite.
/// The cell-aware overload is used by the pullback machinery.
template <typename NuF, typename EpsF>
SpMat assemble_curl_curl_mass_cw(const Mesh& mesh, NuF&& nu, EpsF&& eps,
                                 const TetQuadrature& quad) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.n_cells()) * 36);
  const int nq = static_cast<int>(quad.size());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellBasis b = cell_basis(mesh, c);
    const double scale = 6.0 * b.volume; // reference weights sum to 1/6
    std::array<Vec3, 6> curls;
    for (int e = 0; e < 6; ++e) curls[e] = whitney_curl(b, e);
    Eigen::Matrix<double, 6, 6> Ke = Eigen::Matrix<double, 6, 6>::Zero();
    for (int q = 0; q < nq; ++q) {
      const Vec3 x = mesh.point_at(c, quad.points[q]);
      const Mat3 nu_q = nu(c, q, x);
      const Mat3 eps_q = eps(c, q, x);
      detail::check_spd_sample(nu_q, "assemble_curl_curl_mass(nu)");
      detail::check_spd_sample(eps_q, "assemble_curl_curl_mass(eps)");
      std::array<Vec3, 6> vals;
      for (int e = 0; e < 6; ++e) vals[e] = whitney_value(b, e, quad.points[q]);
      const double w = quad.weights[q] * scale;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          Ke(i, j) += w * (curls[i].dot(nu_q * curls[j]) + vals[i].dot(eps_q * vals[j]));
    }
    for (int i = 0; i < 6; ++i) {
      const int sei = mesh.cell_edges[c][i];
      const int di = mesh.edge_dof[std::abs(sei) - 1];
      if (di < 0) continue;
      for (int j = 0; j < 6; ++j) {
        const int sej = mesh.cell_edges[c][j];
        const int dj = mesh.edge_dof[std::abs(sej) - 1];
        if (dj < 0) continue;
        const double s = ((sei > 0) == (sej > 0)) ? 1.0 : -1.0;
        trip.emplace_back(di, dj, s * Ke(i, j));
      }
    }
  }
  SpMat A(mesh.n_dof, mesh.n_dof);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

inline SpMat assemble_curl_curl_mass(const Mesh& mesh, const std::function<Mat3(const Vec3&)>& nu,
                                     const std::function<Mat3(const Vec3&)>& eps,
                                     const TetQuadrature& quad) {
  return assemble_curl_curl_mass_cw(
      mesh, [&nu](int, int, const Vec3& x) { return nu(x); },
      [&eps](int, int, const Vec3& x) { return eps(x); }, quad);
}

/// int f . phi_i for all interior-edge test functions.
template <typename F>
VecX assemble_load_cw(const Mesh& mesh, F&& f, const TetQuadrature& quad) {
  VecX L = VecX::Zero(mesh.n_dof);
  const int nq = static_cast<int>(quad.size());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellBasis b = cell_basis(mesh, c);
    const double scale = 6.0 * b.volume;
    for (int q = 0; q < nq; ++q) {
      const Vec3 x = mesh.point_at(c, quad.points[q]);
      const Vec3 fq = f(c, q, x);
      if (fq.isZero()) continue;
      const double w = quad.weights[q] * scale;
      for (int e = 0; e < 6; ++e) {
        const int se = mesh.cell_edges[c][e];
        const int d = mesh.edge_dof[std::abs(se) - 1];
        if (d < 0) continue;
        const double s = (se > 0) ? 1.0 : -1.0;
        L[d] += s * w * fq.dot(whitney_value(b, e, quad.points[q]));
      }
    }
  }
  return L;
}

inline VecX assemble_load(const Mesh& mesh, const std::function<Vec3(const Vec3&)>& f,
                          const TetQuadrature& quad) {
  return assemble_load_cw(mesh, [&f](int, int, const Vec3& x) { return f(x); }, quad);
}

/// int_omega g . phi_i using the sharp indicator chi at quadrature points.
template <typename G>
VecX assemble_weighted_vector(const Mesh& mesh, const QuadIndicator& chi, G&& g,
                              const TetQuadrature& quad) {
  return assemble_load_cw(
      mesh,
      [&](int c, int q, const Vec3& x) -> Vec3 {
        return chi(c, q) ? Vec3(g(c, q, x)) : Vec3(Vec3::Zero());
      },
      quad);
}

/// int_omega (K phi_j) . phi_i (row i = test index); K may be nonsymmetric.
template <typename KF>
SpMat assemble_weighted_matrix(const Mesh& mesh, const QuadIndicator& chi, KF&& K,
                               const TetQuadrature& quad) {
  std::vector<Triplet> trip;
  const int nq = static_cast<int>(quad.size());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    bool any = false;
    for (int q = 0; q < nq; ++q) any |= (chi(c, q) != 0);
    if (!any) continue;
    const CellBasis b = cell_basis(mesh, c);
    const double scale = 6.0 * b.volume;
    Eigen::Matrix<double, 6, 6> Ke = Eigen::Matrix<double, 6, 6>::Zero();
    for (int q = 0; q < nq; ++q) {
      if (!chi(c, q)) continue;
      const Vec3 x = mesh.point_at(c, quad.points[q]);
      const Mat3 Kq = K(c, q, x);
      std::array<Vec3, 6> vals;
      for (int e = 0; e < 6; ++e) vals[e] = whitney_value(b, e, quad.points[q]);
      const double w = quad.weights[q] * scale;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) Ke(i, j) += w * vals[i].dot(Kq * vals[j]);
    }
    for (int i = 0; i < 6; ++i) {
      const int sei = mesh.cell_edges[c][i];
      const int di = mesh.edge_dof[std::abs(sei) - 1];
      if (di < 0) continue;
      for (int j = 0; j < 6; ++j) {
        const int sej = mesh.cell_edges[c][j];
        const int dj = mesh.edge_dof[std::abs(sej) - 1];
        if (dj < 0) continue;
        const double s = ((sei > 0) == (sej > 0)) ? 1.0 : -1.0;
        trip.emplace_back(di, dj, s * Ke(i, j));
      }
    }
  }
  SpMat A(mesh.n_dof, mesh.n_dof);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

/// Edge-circulation interpolant of an analytic field (4-point Gauss per edge).
inline EdgeField interpolate_edge_field(const Mesh& mesh,
                                        const std::function<Vec3(const Vec3&)>& F) {
  static const double gx[4] = {0.069431844202973712, 0.33000947820757187,
                               0.66999052179242813, 0.93056815579702623};
  static const double gw[4] = {0.17392742256872692, 0.32607257743127305,
                               0.32607257743127305, 0.17392742256872692};
  EdgeField out(mesh);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const int d = mesh.edge_dof[e];
    if (d < 0) continue;
    const Vec3& a = mesh.vertices[mesh.edges[e][0]];
    const Vec3& b = mesh.vertices[mesh.edges[e][1]];
    const Vec3 t = b - a;
    double circ = 0.0;
    for (int g = 0; g < 4; ++g) circ += gw[g] * F(a + gx[g] * t).dot(t);
    out.dof[d] = circ;
  }
  return out;
}

/// H(curl) norm of a coefficient vector through the nu = eps = I operator.
inline double hcurl_norm(const SpMat& identity_op, const VecX& v) {
  return std::sqrt(std::abs(v.dot(identity_op * v)));
}

/// L2 norm over cells selected by `pred` (quadrature of the FE function).
template <typename Pred>
double field_l2_norm(const Mesh& mesh, const EdgeField& u, const TetQuadrature& quad, Pred&& pred) {
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!pred(c)) continue;
    const CellBasis b = cell_basis(mesh, c);
    const double scale = 6.0 * b.volume;
    for (std::size_t q = 0; q < quad.size(); ++q)
      s += quad.weights[q] * scale * u.value(c, b, quad.points[q]).squaredNorm();
  }
  return std::sqrt(s);
}

/// Matrix Market coordinate dump (1-based indices) for external verification.
inline void write_matrix_market(const SpMat& A, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  os.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

} // namespace hts
