// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hts/types.hpp"

namespace hts {

struct PenaltyParams {
  double gamma = 7e4;
  double j_c = 1.0;

  PenaltyParams() = default;
  PenaltyParams(double g, double jc) : gamma(g), j_c(jc) {
    if (gamma <= 0.0 || j_c <= 0.0)
      throw std::invalid_argument("PenaltyParams: gamma and j_c must be positive");
  }
};

enum class PointClass { Inactive, Smoothing, Active };

/// C^1 regularization of max{1, x} with quadratic transition of width 1/gamma.
inline double max_gamma(double gamma, double x) {
  const double half = 0.5 / gamma;
  if (x - 1.0 >= half) return x;
  if (x - 1.0 <= -half) return 1.0;
  const double s = x - 1.0 + half;
  return 1.0 + 0.5 * gamma * s * s;
}

/// Pointwise classification by gamma*|e|: Active when gamma|e| >= 1 + 1/(2 gamma),
/// Smoothing when |gamma|e| - 1| < 1/(2 gamma), Inactive otherwise.
inline PointClass classify(const PenaltyParams& p, const Vec3& e) {
  const double ge = p.gamma * e.norm();
  const double half = 0.5 / p.gamma;
  if (ge - 1.0 >= half) return PointClass::Active;
  if (std::abs(ge - 1.0) < half) return PointClass::Smoothing;
  return PointClass::Inactive;
}

/// Lambda_gamma(e) = j_c gamma e / max_gamma{1, gamma|e|}. Bounded by j_c.
inline Vec3 lambda_gamma(const PenaltyParams& p, const Vec3& e) {
  const double m = max_gamma(p.gamma, p.gamma * e.norm());
  return (p.j_c * p.gamma / m) * e;
}

namespace detail {

// Indicator factor of the rank-one term: 1 on the active set, the ramp
// gamma(gamma|e| - 1 + 1/(2 gamma)) in the smoothing band, 0 otherwise.
inline double kink_factor(const PenaltyParams& p, double norm_e) {
  const double ge = p.gamma * norm_e;
  const double half = 0.5 / p.gamma;
  if (ge - 1.0 >= half) return 1.0;
  if (std::abs(ge - 1.0) < half) return p.gamma * (ge - 1.0 + half);
  return 0.0;
}

// |e| guarded against division by zero; at e = 0 the point is Inactive and
// the rank-one term vanishes, so the guard never enters the result.
inline double safe_norm(const Vec3& e) { return std::max(e.norm(), 1e-300); }

} // namespace detail

/// Gateaux derivative of Lambda_gamma at e in direction w.
inline Vec3 lambda_gamma_deriv(const PenaltyParams& p, const Vec3& e, const Vec3& w) {
  const double ne = detail::safe_norm(e);
  const double m = max_gamma(p.gamma, p.gamma * e.norm());
  Vec3 out = (p.j_c * p.gamma / m) * w;
  const double ind = detail::kink_factor(p, e.norm());
  if (ind != 0.0) out -= (p.gamma * ind * e.dot(w) / (m * ne)) * lambda_gamma(p, e);
  return out;
}

/// Matrix field psi with Lambda'(e) w . v = psi(e) v . w for all v, w.
/// Operator norm bounded by 2 j_c gamma.
inline Mat3 psi_gamma(const PenaltyParams& p, const Vec3& e) {
  const double ne = detail::safe_norm(e);
  const double m = max_gamma(p.gamma, p.gamma * e.norm());
  Mat3 out = (p.j_c * p.gamma / m) * Mat3::Identity();
  const double ind = detail::kink_factor(p, e.norm());
  if (ind != 0.0)
    out -= (p.gamma * ind / (m * ne)) * (e * lambda_gamma(p, e).transpose());
  return out;
}

} // namespace hts
