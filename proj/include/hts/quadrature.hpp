// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hts/types.hpp"

namespace hts {

/// Quadrature rule on the reference tetrahedron {x,y,z >= 0, x+y+z <= 1}.
/// Points are stored as barycentric 4-tuples (l0,l1,l2,l3); weights sum to
/// the reference volume 1/6. All weights are positive.
struct TetQuadrature {
  int degree = 0;
  std::vector<Eigen::Vector4d> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

namespace detail {

// Gauss-Legendre nodes/weights on [0,1], computed by Newton iteration on P_n.
inline void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // initial guess on [-1,1]
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * t * p1 - k * p2) / (k + 1.0);
      }
      const double dp = n * (t * p0 - p1) / (t * t - 1.0);
      const double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k + 1.0) * t * p1 - k * p2) / (k + 1.0);
    }
    const double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

} // namespace detail

/// Build a rule exact for polynomials up to `degree` (supported: 1..4).
/// Degrees 1 and 2 use the classical centroid and 4-point rules; degrees 3
/// and 4 use a conical-product Gauss rule (collapsed-cube map), which keeps
/// all weights positive.
inline TetQuadrature tet_quadrature(int degree) {
  TetQuadrature q;
  q.degree = degree;
  const double vol = 1.0 / 6.0;
  switch (degree) {
    case 1: {
      q.points.push_back(Eigen::Vector4d::Constant(0.25));
      q.weights.push_back(vol);
      return q;
    }
    case 2: {
      const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
      const double b = (5.0 - std::sqrt(5.0)) / 20.0;
      for (int i = 0; i < 4; ++i) {
        Eigen::Vector4d p = Eigen::Vector4d::Constant(b);
        p[i] = a;
        q.points.push_back(p);
        q.weights.push_back(vol / 4.0);
      }
      return q;
    }
    case 3:
    case 4: {
      // x = u, y = v(1-u), z = w(1-u)(1-v); Jacobian (1-u)^2 (1-v).
      // Point counts chosen so the folded Jacobian stays within Gauss exactness.
      const int nu = (degree == 3) ? 3 : 4;
      const int nv = 3;
      const int nw = (degree == 3) ? 2 : 3;
      std::vector<double> xu, wu, xv, wv, xw, ww;
      detail::gauss_legendre_unit(nu, xu, wu);
      detail::gauss_legendre_unit(nv, xv, wv);
      detail::gauss_legendre_unit(nw, xw, ww);
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j)
          for (int k = 0; k < nw; ++k) {
            const double u = xu[i], v = xv[j], w = xw[k];
            const double x = u;
            const double y = v * (1.0 - u);
            const double z = w * (1.0 - u) * (1.0 - v);
            Eigen::Vector4d p(1.0 - x - y - z, x, y, z);
            q.points.push_back(p);
            q.weights.push_back(wu[i] * wv[j] * ww[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
          }
      return q;
    }
    default:
      throw std::invalid_argument("tet_quadrature: unsupported degree " + std::to_string(degree));
  }
}

} // namespace hts
