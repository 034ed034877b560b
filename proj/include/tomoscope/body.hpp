#pragma once

// Convex-body oracles. Every body answers support / support-point /
// membership / ray-exit queries; the exact subclasses (Ball, Ellipsoid,
// PolytopeV) add closed-form answers, and sections, projections and affine
// images of them stay exact where a closed form exists.

#include "tomoscope/geom.hpp"
#include "tomoscope/polynomial.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tomo {

using json = nlohmann::json;

json vec_json(const Vec& v);
json mat_json(const Mat& m);

class Body {
 public:
  virtual ~Body() = default;

  virtual int dim() const = 0;
  virtual std::string kind() const = 0;
  /// h(u) = max <y, u> over the body, for a unit u.
  virtual double support(const Vec& u) const = 0;
  /// A maximizer of <y, u>; on the boundary.
  virtual Vec support_point(const Vec& u) const = 0;
  virtual bool contains(const Vec& p) const = 0;
  virtual Vec interior_point() const = 0;
  /// Boundary point where the ray origin + t*direction (t > 0) leaves the
  /// body. `origin` must be inside. Default: 80 bisection steps on contains,
  /// bracketed by the supporting hyperplane with normal `direction`.
  virtual Vec ray_exit(const Vec& origin, const Vec& direction) const;
  /// An outer unit normal at boundary point p. `hint` is a nearby normal
  /// (for instance the direction whose support point produced p). Default:
  /// local minimization of h(v) - <p, v> around the hint.
  virtual Vec normal_at(const Vec& p, const Vec& hint) const;
  virtual bool strictly_convex() const { return false; }
  virtual json describe() const = 0;

  /// max over sampled u of h(u) - <z, u>, z the interior point.
  double outer_radius(int samples = 256) const;
};

using BodyPtr = std::shared_ptr<const Body>;

class Ball final : public Body {
 public:
  Ball(Vec center, double radius);
  int dim() const override { return static_cast<int>(center_.size()); }
  std::string kind() const override { return "ball"; }
  double support(const Vec& u) const override { return center_.dot(u) + radius_; }
  Vec support_point(const Vec& u) const override { return center_ + radius_ * u; }
  bool contains(const Vec& p) const override { return (p - center_).squaredNorm() <= radius_ * radius_; }
  Vec interior_point() const override { return center_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  bool strictly_convex() const override { return true; }
  json describe() const override;

  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vec center_;
  double radius_;
};

/// {y : (y - c)^T A (y - c) <= 1}.
class Ellipsoid final : public Body {
 public:
  Ellipsoid(Vec center, Mat shape);
  int dim() const override { return static_cast<int>(center_.size()); }
  std::string kind() const override { return "ellipsoid"; }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  bool contains(const Vec& p) const override;
  Vec interior_point() const override { return center_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  bool strictly_convex() const override { return true; }
  json describe() const override;

  const Vec& center() const { return center_; }
  const Mat& shape() const { return shape_; }
  const Mat& shape_inverse() const { return inverse_; }
  /// Semi-axis lengths, ascending.
  Vec semi_axes() const;
  double volume() const;
  /// Plane {y : (x - c)^T A (y - c) = 1} containing the graze from x.
  Hyperplane polar_plane(const Vec& x) const;
  /// Plane {y : u^T A (y - c) = 0} containing the shadow boundary for u.
  Hyperplane shadow_plane(const Vec& u) const;

 private:
  Vec center_;
  Mat shape_;
  Mat inverse_;
};

/// Convex hull of finitely many points (full-dimensional).
class PolytopeV final : public Body {
 public:
  explicit PolytopeV(std::vector<Vec> points);
  int dim() const override { return dim_; }
  std::string kind() const override { return "polytope"; }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  bool contains(const Vec& p) const override;
  Vec interior_point() const override { return interior_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  json describe() const override;

  /// Extreme points of the hull, in input order.
  const std::vector<Vec>& vertices() const { return vertices_; }
  /// Facet half-spaces <a, y> <= b, a unit.
  const std::vector<Hyperplane>& facets() const { return facets_; }
  /// Exact volume and centroid (dimensions 2 and 3).
  double volume() const;
  Vec centroid() const;

 private:
  int dim_;
  std::vector<Vec> input_;
  std::vector<Vec> vertices_;
  std::vector<Hyperplane> facets_;
  Vec interior_;
  double scale_;
};

struct HarmonicMode {
  int l = 0;  ///< degree (3-D); ignored in 2-D where the degree is |m|
  int m = 0;
  double coef = 1.0;
};

/// Sphere of radius r at c with support h(u) = <c,u> + r + eps f(u), where f
/// is a sum of harmonic modes scaled to unit sup-norm on the certificate grid.
/// Construction fails (GeometryError) when the support Hessian is not
/// positive definite on the certificate grid.
class PerturbedBall final : public Body {
 public:
  PerturbedBall(Vec center, double radius, double amplitude, std::vector<HarmonicMode> modes);
  int dim() const override { return static_cast<int>(center_.size()); }
  std::string kind() const override { return "perturbed-ball"; }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  bool contains(const Vec& p) const override;
  Vec interior_point() const override { return center_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  bool strictly_convex() const override { return true; }
  json describe() const override;

  /// f(u) for unit u (unit sup-norm perturbation profile).
  double profile(const Vec& u) const;
  /// Smallest eigenvalue of the tangential support Hessian over the grid.
  double min_curvature_radius() const { return min_radius_of_curvature_; }
  /// Full Hessian of the 1-homogeneous support extension at unit u.
  Mat support_hessian(const Vec& u) const;

 private:
  // Unit normal whose support point lies on the ray center + t*w (t > 0).
  std::optional<Vec> invert_gauss_map(const Vec& origin, const Vec& w) const;

  Vec center_;
  double radius_;
  double amplitude_;
  std::vector<HarmonicMode> modes_;
  std::vector<Polynomial> polys_;
  std::vector<int> degrees_;
  double scale_ = 1.0;
  double min_radius_of_curvature_ = 0.0;
};

/// Intersection of a body with a hyperplane, in the hyperplane's chart.
class SectionBody final : public Body {
 public:
  SectionBody(BodyPtr parent, Hyperplane plane);
  int dim() const override { return parent_->dim() - 1; }
  std::string kind() const override { return "section"; }
  double support(const Vec& w) const override;
  Vec support_point(const Vec& w) const override;
  bool contains(const Vec& p) const override { return parent_->contains(chart_.to_world(p)); }
  Vec interior_point() const override { return interior_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  bool strictly_convex() const override { return parent_->strictly_convex(); }
  json describe() const override;

  const Chart& chart() const { return chart_; }
  const Hyperplane& plane() const { return plane_; }

 private:
  BodyPtr parent_;
  Hyperplane plane_;
  Chart chart_;
  Vec interior_;
};

/// Orthogonal projection onto u^perp, in the chart of u^perp through O.
class ProjectionBody final : public Body {
 public:
  ProjectionBody(BodyPtr parent, Vec direction);
  int dim() const override { return parent_->dim() - 1; }
  std::string kind() const override { return "projection"; }
  double support(const Vec& w) const override { return parent_->support(chart_.dir_to_world(w)); }
  Vec support_point(const Vec& w) const override;
  bool contains(const Vec& p) const override;
  Vec interior_point() const override { return chart_.to_local(parent_->interior_point()); }
  bool strictly_convex() const override { return parent_->strictly_convex(); }
  json describe() const override;

  const Chart& chart() const { return chart_; }

 private:
  BodyPtr parent_;
  Vec direction_;
  Chart chart_;
};

/// M K + b for invertible M.
class AffineBody final : public Body {
 public:
  AffineBody(BodyPtr parent, Mat linear, Vec shift);
  int dim() const override { return parent_->dim(); }
  std::string kind() const override { return "affine"; }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  bool contains(const Vec& p) const override;
  Vec interior_point() const override { return linear_ * parent_->interior_point() + shift_; }
  Vec ray_exit(const Vec& origin, const Vec& direction) const override;
  Vec normal_at(const Vec& p, const Vec& hint) const override;
  bool strictly_convex() const override { return parent_->strictly_convex(); }
  json describe() const override;

 private:
  BodyPtr parent_;
  Mat linear_;
  Mat inverse_;
  Vec shift_;
};

// --- operations ----------------------------------------------------------------

struct Section {
  BodyPtr body;  ///< in chart coordinates
  Chart chart;
};

/// K ∩ H. Exact (Ball / Ellipsoid) for exact parents, otherwise a SectionBody.
/// Throws EmptySectionError when H misses int K.
Section section(const BodyPtr& body, const Hyperplane& plane);

struct Projection {
  BodyPtr body;  ///< in chart coordinates of u^perp
  Chart chart;
};

/// Orthogonal projection along u. Exact for balls, ellipsoids and polytopes.
Projection orth_project(const BodyPtr& body, const Vec& u);

/// Image M K + b; exact for balls, ellipsoids and polytopes.
BodyPtr affine_image(const BodyPtr& body, const Mat& linear, const Vec& shift);

struct CentralProjection {
  Chart chart;                  ///< chart of H
  std::vector<Vec> directions;  ///< sampled chart directions w
  std::vector<double> support;  ///< support of the image for each w
  std::vector<Vec> boundary;    ///< image support points, chart coordinates
  // Planar case: the image is the segment [a, b] on the line H.
  Vec a, b;
  double length = 0.0;
};

/// Support of the central projection of K from x onto H in world direction
/// w (w parallel to H). x must be outside K and strictly on one side of H with
/// K in the open half-space below x's parallel plane.
double central_image_support(const Body& body, const Vec& x, const Hyperplane& plane, const Vec& w);

/// Central projection from apex x onto H, sampled at `count` chart directions
/// (ignored for n = 2). Throws ApexError (x in K), InputError (x on H) and
/// ProjectionOverflowError (a ray from x through K is parallel to or misses H).
CentralProjection central_project(const BodyPtr& body, const Vec& x, const Hyperplane& plane, int count = 64);

enum class CentroidMethod { exact_2d, monte_carlo };

struct CentroidOptions {
  CentroidMethod method = CentroidMethod::exact_2d;
  std::uint64_t seed = 0;
  int samples = 200000;
};

struct CentroidResult {
  Vec value;
  double error = 0.0;  ///< standard error (Monte Carlo) or quadrature estimate
};

CentroidResult centroid(const Body& body, const CentroidOptions& options = {});

struct NestedResult {
  bool nested = false;
  double slack = 0.0;  ///< min over samples of h_K - h_L
  Vec worst_direction;
};

/// Whether h_L(u) <= h_K(u) - margin on sampled u. margin < 0 selects the
/// default 1e-3 * outer radius of K.
NestedResult nested_check(const Body& inner, const Body& outer, double margin = -1.0, int samples = 256);

// --- planar chord integrals ----------------------------------------------------

struct Chord {
  Vec a, b;
};

/// Endpoints of the chord {y : <y, u> = s} of a planar body, empty outside
/// its open width.
std::optional<Chord> chord(const Body& body, const Vec& u, double s);
/// Length of the chord {y : <y, u> = s} of a planar body (0 outside its width).
double chord_length(const Body& body, const Vec& u, double s);

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

/// ∫_lo^hi s^power * chord_length(u, s) ds for a planar body, by adaptive
/// Gauss-Kronrod with a cosine substitution at both ends.
Integral chord_integral(const Body& body, const Vec& u, double lo, double hi, int power, double tol = 1e-11);

/// Directions used by nested_check and friends: sphere grid plus ±axes.
std::vector<Vec> probe_directions(int n, int samples);

}  // namespace tomo
