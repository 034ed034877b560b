#pragma once

// Cycles of hyperplanes H_y = {x : <x, y> = delta(y)} generated by an odd
// function delta on the unit sphere, the "cycle for K" certificate (any two
// planes meet inside K), and the solver that finds a cycle plane containing
// a given codimension-2 flat.

#include "tomoscope/body.hpp"
#include "tomoscope/geom.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tomo {

class CycleFunction {
 public:
  using Fn = std::function<double(const Vec&)>;

  /// delta = 0.
  static CycleFunction zero(int n);
  /// delta(y) = <a, y>.
  static CycleFunction linear(const Vec& a);
  /// delta = sum coef * harmonic, planar harmonics of odd order m in 2-D,
  /// solid harmonics of odd degree l in 3-D.
  static CycleFunction odd_harmonic_sum(int n, std::vector<HarmonicMode> terms);
  /// Arbitrary callable; still subject to the oddness probe.
  static CycleFunction custom(int n, Fn fn, std::string tag);

  int dim() const { return dim_; }
  double operator()(const Vec& y) const { return fn_(y); }
  const std::string& description() const { return description_; }
  json describe() const { return params_; }
  /// y -> delta(q^T y): the function carried along by the rotation q.
  CycleFunction rotated(const Mat& q) const;

 private:
  CycleFunction(int n, Fn fn, std::string description, json params);

  int dim_ = 0;
  Fn fn_;
  std::string description_;
  json params_;
};

/// Largest |delta(y) + delta(-y)| over `pairs` antipodal probes.
double oddness_defect(const CycleFunction& f, int pairs = 64);

struct CyclePlane {
  Vec y;
  Hyperplane plane;
};

CyclePlane cycle_plane(const CycleFunction& f, const Vec& y);

struct CycleCheck {
  bool is_cycle = true;
  int tested = 0;
  /// Near-parallel pairs (|<p, q>| > 1 - 1e-9) are skipped.
  int skipped = 0;
  /// Smallest depth inside K reached on the tested flats.
  double worst_depth = std::numeric_limits<double>::infinity();
  std::optional<std::pair<Vec, Vec>> witness;

  json to_json() const;
};

/// Draws `pairs` random normal pairs (p, q) and tests whether H_p ∩ H_q
/// meets int K, by maximizing the sampled support slack along the flat.
/// Stops at the first failing pair.
CycleCheck is_cycle_for(const CycleFunction& f, const Body& K, int pairs, std::uint64_t seed);

struct LemmaSolution {
  CyclePlane plane;
  /// Parameter of the normal on the circle S(ell).
  double t = 0.0;
  /// Largest distance from ell's probe points to the plane.
  double residual = 0.0;
};

/// Cycle plane containing the (n-2)-flat ell: zero of
/// sigma(t) = <O', v(t)> - delta(v(t)) on the circle of unit normals
/// orthogonal to ell. Throws UnsupportedError for other codimensions,
/// ContractError when sigma fails the oddness probe and SolverError when
/// the containment residual exceeds tol.
LemmaSolution lemma1_find(const CycleFunction& f, const Body& K, const FlatSpec& ell, double tol);

}  // namespace tomo
