#pragma once

// Closed-form reference answers used by the tests. Everything here is
// computed independently of the library's numerical paths (no support-point
// bisection, no quadrature), so agreement is meaningful.

#include "tomoscope/body.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace oracle {

using tomo::kPi;
using tomo::Vec;

/// Area of the circular segment cut from a disc of radius r at distance d
/// from the center.
inline double disc_segment_area(double r, double d) {
  if (d >= r) return 0.0;
  if (d <= -r) return kPi * r * r;
  return r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d);
}

/// Tangent points from external point x to the circle (c, r), ordered so the
/// first is counter-clockwise of the ray c -> x as seen from c.
inline std::pair<Vec, Vec> circle_tangent_points(const Vec& c, double r, const Vec& x) {
  const Vec w = x - c;
  const double d = w.norm();
  const double ang = std::acos(r / d);
  const double base = std::atan2(w[1], w[0]);
  return {tomo::make_vec({c[0] + r * std::cos(base + ang), c[1] + r * std::sin(base + ang)}),
          tomo::make_vec({c[0] + r * std::cos(base - ang), c[1] + r * std::sin(base - ang)})};
}

/// Intersection of the lines through (p1, d1) and (p2, d2) in the plane.
inline Vec line_intersection(const Vec& p1, const Vec& d1, const Vec& p2, const Vec& d2) {
  const double det = d1[0] * (-d2[1]) - d1[1] * (-d2[0]);
  const Vec r = p2 - p1;
  const double t = (r[0] * (-d2[1]) - r[1] * (-d2[0])) / det;
  return p1 + t * d1;
}

/// Test-only body: upper half of the unit disc. Implements the oracle
/// interface from scratch so generic library paths are exercised.
class HalfDisc final : public tomo::Body {
 public:
  int dim() const override { return 2; }
  std::string kind() const override { return "half-disc"; }
  double support(const Vec& u) const override {
    if (u[1] >= 0.0) return 1.0;
    return std::abs(u[0]);
  }
  Vec support_point(const Vec& u) const override {
    if (u[1] >= 0.0) return u;
    return tomo::make_vec({u[0] >= 0.0 ? 1.0 : -1.0, 0.0});
  }
  bool contains(const Vec& p) const override { return p[1] >= 0.0 && p.squaredNorm() <= 1.0; }
  Vec interior_point() const override { return tomo::make_vec({0.0, 0.4}); }
  tomo::json describe() const override { return {{"kind", "half-disc"}}; }
};

/// Test-only body: the unit ball described only through the generic
/// interface (no exact overrides), to compare generic vs exact paths.
class OpaqueBall final : public tomo::Body {
 public:
  OpaqueBall(Vec c, double r) : c_(std::move(c)), r_(r) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  std::string kind() const override { return "opaque-ball"; }
  double support(const Vec& u) const override { return c_.dot(u) + r_; }
  Vec support_point(const Vec& u) const override { return c_ + r_ * u; }
  bool contains(const Vec& p) const override { return (p - c_).norm() <= r_; }
  Vec interior_point() const override { return c_; }
  bool strictly_convex() const override { return true; }
  tomo::json describe() const override { return {{"kind", "opaque-ball"}}; }

 private:
  Vec c_;
  double r_;
};

/// Tangent points from x to the axis-aligned ellipse with center c and
/// semi-axes a, b (affine image of the unit-circle construction).
inline std::pair<Vec, Vec> ellipse_tangent_points(const Vec& c, double a, double b, const Vec& x) {
  const Vec xs = tomo::make_vec({(x[0] - c[0]) / a, (x[1] - c[1]) / b});
  const auto [p, q] = circle_tangent_points(tomo::make_vec({0, 0}), 1.0, xs);
  return {tomo::make_vec({c[0] + a * p[0], c[1] + b * p[1]}), tomo::make_vec({c[0] + a * q[0], c[1] + b * q[1]})};
}

/// |<q, x>| where q joins the support lines from x and -x that touch the
/// ellipse on the side of perp(x).
inline double antipodal_deviation(const Vec& c, double a, double b, const Vec& x) {
  const Vec e = tomo::make_vec({-x[1], x[0]});
  auto pick = [&](const Vec& apex) {
    const auto [p, q] = ellipse_tangent_points(c, a, b, apex);
    return p.dot(e) > 0.0 ? p : q;
  };
  const Vec tp = pick(x), tm = pick(-x);
  const Vec q = line_intersection(x, tp - x, -x, tm + x);
  return std::abs(q.dot(x));
}

// Random symmetric positive definite 3x3 with eigenvalues in [0.5, 3].
inline tomo::Mat random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ev(0.5, 3.0);
  const tomo::Mat q = tomo::random_orthogonal(3, rng());
  Vec d = tomo::make_vec({ev(rng), ev(rng), ev(rng)});
  return q * d.asDiagonal() * q.transpose();
}

// Semi-axes of the ellipse E ∩ H computed through the unit-sphere picture:
// y = c + A^{-1/2} z maps the unit sphere onto E, so the section is the image
// of a circle of radius sqrt(1 - d^2).
inline std::pair<double, double> section_semi_axes(const Vec& c, const tomo::Mat& a, const tomo::Hyperplane& h) {
  const Eigen::Matrix3d a3 = a;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a3);
  const Eigen::Matrix3d inv_sqrt = es.operatorInverseSqrt();
  // Plane in z: <n, c + S z> = o  ->  <S n, z> = o - <n, c>.
  const Eigen::Vector3d nz = inv_sqrt * Eigen::Vector3d(h.normal);
  const double dz = (h.offset - h.normal.dot(c)) / nz.norm();
  const double rho = std::sqrt(1.0 - dz * dz);
  const Eigen::Vector3d nn = nz.normalized();
  Eigen::Vector3d t1 = nn.unitOrthogonal();
  Eigen::Vector3d t2 = nn.cross(t1);
  Eigen::Matrix<double, 3, 2> t;
  t << t1, t2;
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(inv_sqrt * t);
  return {rho * svd.singularValues()[0], rho * svd.singularValues()[1]};
}

}  // namespace oracle
