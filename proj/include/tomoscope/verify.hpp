#pragma once

// Checkers that score the hypotheses of the characterization results on
// concrete bodies, the planar orbit simulators, and the conjecture sweeps.
// Checkers never assert a conclusion ("K is a ball"); conclusion-side scores
// are reported separately where they are cheap.

#include "tomoscope/body.hpp"
#include "tomoscope/cycles.hpp"
#include "tomoscope/floating.hpp"
#include "tomoscope/geom.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tomo {

/// Finite numbers as numbers, +-inf as "inf" / "-inf", NaN as "nan".
json number_json(double v);

struct SampleRecord {
  /// "apex", "direction", "normal", "plane" ...
  std::string kind;
  Vec at;
  double score = 0.0;
  bool skipped = false;
  std::string note;
};

struct VerificationReport {
  std::string theorem;
  json bodies = json::array();
  std::vector<SampleRecord> samples;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  int skipped = 0;
  /// Checker-specific extras (conclusion-side scores, audits, anchors).
  json details = json::object();

  /// Sets skipped, max_violation (inf when nothing was scored) and pass.
  void finalize();
  std::string verdict() const { return pass ? "pass" : "fail"; }
  json to_json() const;
  /// Header: index,kind,c0,c1,c2,c3,score,skipped
  std::string samples_csv() const;
};

struct CheckOptions {
  /// Closed-form tolerance; Monte Carlo paths use max(tolerance, 3 sigma).
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Monte Carlo sample count for volumes and centroids.
  int samples = 200000;
  /// In-plane directions per floating-pair test, points per graze.
  int directions = 64;
  /// Optional orthogonal frame Q: the checker samples in Q's coordinates
  /// (bodies seen through Q^T, sample locations reported in world
  /// coordinates), so a rotated problem is sampled at the rotated points.
  std::optional<Mat> frame;
};

// --- central symmetry --------------------------------------------------------

struct SymmetryScore {
  /// max |g(u) - g(-u)|, g(u) = h(u) - <q, u>.
  double asymmetry = 0.0;
  Vec worst_direction;
  /// Largest angle between the outer normal at one end of a chord through
  /// q and the reversed normal at the other end, over 8 chords.
  double chord_audit = 0.0;
};

/// Throws InputError unless q is an interior point of K.
SymmetryScore symmetric_about(const Body& K, const Vec& q, int count);

// --- checkers ----------------------------------------------------------

/// Tangent sections of K at support points of L must be centrally symmetric
/// about the tangency point. n >= 3.
VerificationReport check_thmO(const BodyPtr& K, const BodyPtr& L, int count, const CheckOptions& options = {});

struct SphereSpec {
  Vec center;
  double radius = 0.0;
};

using Thm1Mode = std::variant<CycleFunction, SphereSpec>;

/// For planes of a cycle or tangent planes of a sphere, the sections of L
/// must float in the sections of K; score = cap-volume spread / mean cap.
VerificationReport check_thm1(const BodyPtr& K, const BodyPtr& L, const Thm1Mode& mode, int count,
                              const CheckOptions& options = {});

/// Orthogonal shadows of L must float in the shadows of K. n >= 3.
VerificationReport check_conj2(const BodyPtr& K, const BodyPtr& L, int count, const CheckOptions& options = {});

/// |centroid of the shadow of K - shadow of q| over directions. n >= 3.
VerificationReport check_conj3(const BodyPtr& K, const Vec& q, int count, const CheckOptions& options = {});

/// Antipodal support-line intersections must lie on x^perp. K inside the
/// open unit ball; plane_count 2-planes per apex when n >= 3.
VerificationReport check_thm2(const BodyPtr& K, int apex_count, int plane_count, const CheckOptions& options = {});

/// Spread of the cone-section segment lengths over unit apexes. n = 2.
VerificationReport check_thm3(const BodyPtr& K, int count, const CheckOptions& options = {});

/// Congruence of the central projections onto x^perp against the first
/// apex: min over 720 rotations and a reflection of the sup-distance of the
/// Steiner-centered support functions. n = 3.
VerificationReport check_thm4(const BodyPtr& K, int count, const CheckOptions& options = {});

/// Grazes of L from apexes on the boundary of K must be planar ellipses.
/// score = max(plane RMS / diameter, conic residual), inf unless an ellipse.
/// Apexes that land in L are skipped. n = 3.
VerificationReport check_thm6(const BodyPtr& K, const BodyPtr& L, int apex_count, int pts_per_graze,
                              const CheckOptions& options = {});

struct ParallelPlanes {
  PlaneFit graze;
  /// Fit through the points where the tangent rays leave K.
  PlaneFit far;
  double angle = 0.0;
  std::vector<Vec> far_points;
};

/// Throws ApexError when x is in L.
ParallelPlanes graze_and_far_trace(const Body& K, const Body& L, const Vec& x, int count);

/// Graze of L from x and the far trace of the cone on the boundary of K
/// must lie in parallel hyperplanes. score = max(RMS of both fits, angle of
/// the normals). n >= 3.
VerificationReport check_thm7(const BodyPtr& K, const BodyPtr& L, int apex_count, const CheckOptions& options = {});

// --- orbits ----------------------------------------------------------------------

enum class OrbitVariant { thm2, thm3 };

struct OrbitState {
  OrbitVariant variant = OrbitVariant::thm2;
  std::vector<Vec> points;
  /// Measured angle x_{i+1} O x_i for each step.
  std::vector<double> step_angles;
  /// Mean of step_angles.
  double step_angle = 0.0;
  /// Distance to O of each tangent line used.
  std::vector<double> support_values;
  /// Largest |h_K(nu) - <apex, nu>| over the tangent lines.
  double tangency_residual = 0.0;
  /// Largest angular gap between consecutive orbit points on the circle.
  double max_gap = 0.0;
  /// Smallest p > 0 with |x_p - x_0| < 1e-9, 0 if none.
  int period = 0;
  /// Number of points at mutual distance >= 1e-6.
  int distinct_points = 0;

  double support_spread() const;
  json to_json() const;
};

/// thm2: x_{i+1} is the far end of the left support chord from -x_i.
/// thm3: x_{i+1} is the far end of the left support chord from x_i.
/// Throws GeometryError unless K lies in the open unit disc.
OrbitState run_orbit(const BodyPtr& K, const Vec& x0, int steps, OrbitVariant variant);

/// Orbit as a report: one sample per step scored by |support value - first
/// support value|; max_violation is the support spread. Orbit in details.
VerificationReport check_orbit(const BodyPtr& K, const Vec& x0, int steps, OrbitVariant variant,
                               const CheckOptions& options = {});

/// Chord-midpoint property of a planar floating body as a report: one
/// sample per cut direction (redundant cuts skipped); details carry delta,
/// the cut polygon and the first tangent chord with its midpoint.
VerificationReport check_chord_midpoints(const FloatingSpec& spec, int count, const CheckOptions& options = {});

// --- conclusion-side scores ------------------------------------------------------

/// Max first-order geometric residual of the best-fit quadric through
/// boundary points (radial from the interior point), in units of the RMS
/// radius of those points.
double ellipsoid_distance(const Body& K, int samples = 400);
/// Spread of h(u) - <s, u> with s the Steiner point, relative to mean width.
double ball_distance(const Body& K, int samples = 400);

// --- conjecture sweeps -----------------------------------------------------------

enum class ConjectureId { C1, C2, C3, P1 };
std::string to_string(ConjectureId id);
ConjectureId conjecture_from_string(const std::string& s);

struct BodyPair {
  /// Outer body (C1: apex carrier, C2: K, C3 / P1: the body itself).
  BodyPtr K;
  /// Inner body (C1, C2).
  BodyPtr L;
};

struct SweepFamily {
  std::string name;
  std::vector<double> values;
  std::function<BodyPair(double)> make;
};

struct SweepRow {
  double epsilon = 0.0;
  double hypothesis = 0.0;
  double conclusion = 0.0;
  json extra = json::object();
};

struct SweepReport {
  ConjectureId id = ConjectureId::C1;
  std::string family;
  double tolerance = 0.0;
  std::vector<SweepRow> rows;
  /// Indices of rows with hypothesis < tol and conclusion > 10 tol.
  std::vector<int> candidates;

  json to_json() const;
  /// Header: epsilon,hypothesis_score,conclusion_score
  std::string to_csv() const;
};

/// Hypothesis / conclusion scores per family member; `budget` is the sample
/// count per member (apexes or directions).
SweepReport explore_conjecture(ConjectureId id, const SweepFamily& family, int budget, const CheckOptions& options = {});

struct P1Scores {
  double congruence = 0.0;
  double translation = 0.0;
  double volume = 0.0;
};

/// Compare C(K, x) and C(K, -x) on x^perp: in 2-D all three readings reduce
/// to the length difference.
P1Scores antipodal_image_scores(const BodyPtr& K, const Vec& x);

}  // namespace tomo
