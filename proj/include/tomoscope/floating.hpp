#pragma once

// Cap volumes, floating bodies K_delta (intersection of the half-spaces that
// cut caps of volume delta), and the floating-pair test: L is a floating body
// of K when every supporting hyperplane of L cuts a cap of the same volume.

#include "tomoscope/body.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tomo {

/// Monte Carlo settings for n >= 3 (planar bodies use quadrature).
struct VolumeOptions {
  std::uint64_t seed = 0;
  int samples = 200000;
};

/// vol(K ∩ {<y, u> >= t}) as a function of t for one direction. Planar
/// bodies integrate chord lengths; in higher dimension one sample set is
/// drawn in the u-aligned bounding box and the u-coordinates of the hits are
/// kept, so every t costs a binary search.
class CapProfile {
 public:
  CapProfile(const Body& body, const Vec& u, const VolumeOptions& options = {});

  Integral volume(double t) const;
  /// Offset range [-h(-u), h(u)].
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool monte_carlo() const { return monte_carlo_; }

 private:
  const Body* body_;
  Vec u_;
  double lo_ = 0.0, hi_ = 0.0;
  bool monte_carlo_ = false;
  double box_volume_ = 0.0;
  int samples_ = 0;
  std::vector<double> hits_;  // ascending u-coordinates of accepted samples
};

/// Cap volume with its error estimate; 0 when t >= h_K(u).
Integral cap_volume(const Body& K, const Vec& u, double t, const VolumeOptions& options = {});

/// n-volume: chord quadrature in 2-D, closed form for balls, ellipsoids and
/// 3-D polytopes, Monte Carlo otherwise.
Integral body_volume(const Body& K, const VolumeOptions& options = {});

/// A body with a cap volume 0 < delta < vol/2.
struct FloatingSpec {
  BodyPtr body;
  double delta = 0.0;
  VolumeOptions options;
  Integral volume;

  /// Throws SpecError when delta is outside (0, vol/2).
  FloatingSpec(BodyPtr body, double delta, VolumeOptions options = {});
};

struct CapCut {
  Vec direction;
  double offset = 0.0;
  double achieved_volume = 0.0;
  double volume_error = 0.0;
};

/// Offset t with vol(K ∩ {<y,u> >= t}) = delta, by bisection over
/// [-h(-u), h(u)].
CapCut cap_cut(const FloatingSpec& spec, const Vec& u);
std::vector<CapCut> cap_cuts(const FloatingSpec& spec, std::span<const Vec> directions);

struct Membership {
  bool inside = false;
  /// min_u (t(u) - <p, u>); negative when p is cut off.
  double margin = 0.0;
};

Membership floating_contains(const FloatingSpec& spec, const Vec& p, std::span<const Vec> directions);
Membership floating_contains(std::span<const CapCut> cuts, const Vec& p);

/// Planar K_delta approximated by the polygon bounded by the cut lines.
PolytopeV floating_polygon(std::span<const CapCut> cuts);

struct FloatingPairOptions {
  /// Relative spread allowed: pass iff spread <= tolerance * delta_hat.
  double tolerance = 1e-3;
  VolumeOptions volume;
};

struct FloatingPairReport {
  double delta_hat = 0.0;
  double spread = 0.0;
  /// Bound actually applied: max(tolerance * delta_hat, 3 * max standard
  /// error) when the volumes are Monte Carlo estimates.
  double bound = 0.0;
  bool pass = false;
  std::vector<Vec> directions;
  std::vector<double> offsets;
  std::vector<double> volumes;
  std::vector<double> errors;

  double ratio() const { return delta_hat > 0.0 ? spread / delta_hat : 0.0; }
  json to_json() const;
};

/// Caps of K cut by the supporting hyperplanes of L. Throws NestingError
/// unless L sits inside K.
FloatingPairReport is_floating_pair(const Body& K, const Body& L, std::span<const Vec> directions,
                                    const FloatingPairOptions& options = {});

struct MidpointCheck {
  double max_deviation = 0.0;
  std::vector<CapCut> cuts;
  std::vector<Vec> midpoints;
  /// Whether the cut line touches the sampled floating body; cut lines that
  /// are redundant in the intersection are not tangent chords.
  std::vector<bool> tangent;
  std::vector<double> deviations;
  int non_tangent = 0;
};

/// For each of `count` directions, the midpoint of the chord cut at t(u)
/// and how far it falls outside the sampled floating body. Only chords
/// tangent to the floating body contribute to max_deviation.
MidpointCheck tangent_chord_midpoint_check(const FloatingSpec& spec, int count);

struct CentroidCheck {
  double max_deviation = 0.0;
  std::vector<Vec> tangency_points;
  std::vector<double> deviations;
};

/// Distance between each tangency point x on ∂L and the centroid of the
/// section of K by the tangent plane at x, for `count` normals.
CentroidCheck tangent_section_centroid_check(const BodyPtr& K, const Body& L, int count);

}  // namespace tomo
