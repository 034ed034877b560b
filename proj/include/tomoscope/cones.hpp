#pragma once

// Support cones from an apex, grazes (tangency loci), shadow boundaries, and
// the planar probes used by the antipodal-cone and constant-segment checks.

#include "tomoscope/body.hpp"
#include "tomoscope/geom.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tomo {

struct GrazeSample {
  /// true for a shadow boundary (`apex` holds the illumination direction).
  bool is_direction = false;
  Vec apex;
  std::vector<Vec> points;
  /// Recovered outer normal at each point.
  std::vector<Vec> normals;
  /// |<nu, apex - p>| for grazes, |<nu, u>| for shadow boundaries.
  std::vector<double> residuals;
  /// Samples discarded for a failed bracket or tangency residual.
  int failures = 0;
  PlaneFit plane_fit;
  /// 3-D only: conic through the points in the fitted plane's chart.
  std::optional<ConicFit> conic_fit;

  json to_json() const;
  /// One point per row: index, coordinates, residual.
  std::string to_csv() const;
};

/// Tangency points of the cone from `apex` over L. For each of `count`
/// half great circles of normals starting at a separating normal, the sign
/// change of h_L(u) - <apex, u> is bisected; the graze point is the support
/// point of the crossing normal. In 2-D there are exactly two points.
/// Throws ApexError when apex is in L, GeometryError when more than 5% of
/// the samples fail.
GrazeSample graze(const Body& L, const Vec& apex, int count);

/// Support points of `count` directions orthogonal to u.
GrazeSample shadow_boundary(const Body& K, const Vec& u, int count);

struct AntipodalProbe {
  Vec x;
  FlatSpec plane2;
  /// Intersection of the two chosen support lines (world coordinates).
  Vec q;
  double deviation = 0.0;
  /// Touch points of the support lines from x and from -x.
  Vec touch_plus, touch_minus;
};

/// Slice of K by a 2-plane through x and -x; support lines from x and from
/// -x touching on the side of a fixed in-plane vector orthogonal to x;
/// deviation = |<q, x>|. Throws ContainmentError unless K is inside the
/// open unit ball, InputError if plane2 misses x or -x.
AntipodalProbe antipodal_probe(const BodyPtr& K, const Vec& x, const FlatSpec& plane2);

struct ConeSegment {
  double length = 0.0;
  /// Angles between [x, O] and the tangent line on the counter-clockwise
  /// side (alpha) and on the clockwise side (theta), signed so that a disc
  /// centered at O gives alpha = theta = asin(r).
  double alpha = 0.0;
  double theta = 0.0;
  /// Endpoints on the line x^perp through O, world coordinates.
  Vec a, b;
};

/// C(K, x) intersected with the line x^perp through O, for a planar body
/// inside the open unit disc and a unit apex x.
ConeSegment cone_section_segment(const BodyPtr& K, const Vec& x);

/// 2-D slice of K by a 2-flat (any ambient dimension up to 4), with the
/// chart that maps slice coordinates to world coordinates.
Section slice2(const BodyPtr& K, const FlatSpec& plane2);

/// Separating normal u with h_L(u) < <apex, u>; throws ApexError if none.
Vec separating_normal(const Body& L, const Vec& apex);

}  // namespace tomo
