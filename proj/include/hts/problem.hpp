// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "hts/fem.hpp"
#include "hts/mesh.hpp"
#include "hts/regularization.hpp"

namespace hts {

enum class TargetKind { Zero, Ball };

/// The circular coil current: tangential unit field of magnitude R around the
/// axis y = z = 0.5, supported on the pipe coil Omega_p. The denominator is
/// guarded; the coil band keeps regular points away from the singular axis.
inline Vec3 coil_source(const Vec3& p, double R) {
  if (!in_coil(p)) return Vec3::Zero();
  const double dy = p.y() - 0.5, dz = p.z() - 0.5;
  const double r = std::sqrt(dy * dy + dz * dz);
  if (r < 1e-12) return Vec3::Zero();
  return (R / r) * Vec3(0.0, -dz, dy);
}

/// Concrete data of the numerical setup: materials, penalization, tracking
/// weight and target. Material fields are evaluable anywhere; their spatial
/// derivatives on B are zero for the default (constant) choices.
struct ProblemData {
  const Mesh* mesh = nullptr;
  PenaltyParams penalty;
  double coil_R = 1e-3;

  std::function<Mat3(const Vec3&)> eps = [](const Vec3&) { return Mat3::Identity(); };
  std::function<Mat3(const Vec3&)> nu = [](const Vec3&) { return Mat3::Identity(); };
  std::function<double(const Vec3&)> kappa = [](const Vec3&) { return 8e7; };
  std::function<Vec3(const Vec3&)> grad_kappa = [](const Vec3&) { return Vec3::Zero(); };

  TargetKind target_kind = TargetKind::Zero;
  EdgeField E_d; // discrete target (empty for the zero target)
  // Include the D E_d^T term of S0 for the discrete target (per-cell Jacobian).
  bool target_jacobian = true;

  Vec3 source(const Vec3& p) const { return coil_source(p, coil_R); }

  Vec3 target(int cell, const CellBasis& b, const Eigen::Vector4d& bary) const {
    if (target_kind == TargetKind::Zero) return Vec3::Zero();
    return E_d.value(cell, b, bary);
  }

  Vec3 target_at(const Vec3& p) const {
    if (target_kind == TargetKind::Zero) return Vec3::Zero();
    return E_d.value_at(p);
  }

  Mat3 target_jacobian_at(int cell, const CellBasis& b) const {
    if (target_kind == TargetKind::Zero || !target_jacobian) return Mat3::Zero();
    return E_d.jacobian(cell, b);
  }
};

/// Example 1: zero target, kappa = 8e7, unit materials.
inline ProblemData build_example1(const Mesh& mesh, double gamma = 7e4, double j_c = 1.0) {
  ProblemData d;
  d.mesh = &mesh;
  d.penalty = PenaltyParams(gamma, j_c);
  d.target_kind = TargetKind::Zero;
  return d;
}

} // namespace hts
