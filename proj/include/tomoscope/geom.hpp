#pragma once

// Dimension-generic primitives (n <= 4) and the numerical workhorses shared by
// every other module: plane and conic fitting, bracketed root finding, zero
// finding for odd functions on a circle, 1-D unimodal minimization and
// sphere sampling.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tomo {

inline constexpr int kMaxDim = 4;
inline constexpr double kPi = std::numbers::pi;

/// Euclidean vector of runtime length 1..4; stored inline, no heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
/// Small dense matrix (at most 4x4), e.g. chart bases and shape matrices.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim,
                          kMaxDim>;
using Point2 = Eigen::Vector2d;
using ScalarFn = std::function<double(double)>;

Vec make_vec(std::initializer_list<double> coords);
Vec unit(const Vec& v);
/// Counter-clockwise quarter turn of a planar vector.
Vec perp(const Vec& v2);

/// {y : <y, normal> = offset} with a unit normal.
struct Hyperplane {
  Vec normal;
  double offset = 0.0;

  Hyperplane() = default;
  /// Normalizes `normal` and rescales `offset` accordingly.
  Hyperplane(const Vec& normal, double offset);
  static Hyperplane through(const Vec& normal, const Vec& point);

  int dim() const { return static_cast<int>(normal.size()); }
  double signed_distance(const Vec& p) const { return p.dot(normal) - offset; }
  Vec project(const Vec& p) const { return p - signed_distance(p) * normal; }
  Hyperplane flipped() const { return {-normal, -offset}; }
};

/// Affine flat basepoint + span(directions); directions are orthonormalized on
/// construction.
struct FlatSpec {
  Vec basepoint;
  std::vector<Vec> directions;

  FlatSpec() = default;
  FlatSpec(Vec basepoint, std::vector<Vec> directions);

  int ambient_dim() const { return static_cast<int>(basepoint.size()); }
  int dim() const { return static_cast<int>(directions.size()); }
  double distance(const Vec& p) const;
};

/// world = origin + basis * local, basis has orthonormal columns.
struct Chart {
  Vec origin;
  Mat basis;

  int ambient_dim() const { return static_cast<int>(basis.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }
  Vec to_world(const Vec& local) const { return origin + basis * local; }
  Vec to_local(const Vec& world) const { return basis.transpose() * (world - origin); }
  Vec dir_to_world(const Vec& local) const { return basis * local; }
  Vec dir_to_local(const Vec& world) const { return basis.transpose() * world; }
};

/// Orthonormal basis of the complement of span(dirs), completed by
/// Gram-Schmidt over the coordinate axes in index order (axes that are
/// numerically inside the span are skipped). Columns of the result.
Mat complement_basis(std::span<const Vec> dirs, int n);
/// complement_basis of a single normal: an n x (n-1) matrix.
Mat complete_basis(const Vec& normal);
/// Chart of a hyperplane: origin offset*normal, basis complete_basis(normal).
Chart hyperplane_chart(const Hyperplane& h);

// --- fitting -----------------------------------------------------------------

struct PlaneFit {
  Hyperplane plane;
  double residual = 0.0;         ///< RMS orthogonal distance
  double thickness_ratio = 0.0;  ///< smallest / largest singular value
  Vec centroid;
};

/// Total-least-squares hyperplane through >= n+1 points (PCA of the centered
/// cloud). Throws InputError for too few / identical points and
/// DegenerateFitError when the normal is not determined.
PlaneFit fit_plane(std::span<const Vec> points);

enum class ConicClass { ellipse, parabola, hyperbola, degenerate };
std::string to_string(ConicClass c);

struct EllipseShape {
  Point2 center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  ///< of the major axis, radians
};

struct ConicFit {
  /// a, b, c, d, e, f of a x^2 + b xy + c y^2 + d x + e y + f = 0, unit norm.
  std::array<double, 6> coefficients{};
  ConicClass kind = ConicClass::degenerate;
  /// RMS algebraic residual in the normalized frame (similarity invariant).
  double residual = 0.0;
  /// b^2 - 4ac of the unit conic in the normalized frame.
  double discriminant = 0.0;

  std::optional<EllipseShape> ellipse() const;
};

/// Least-squares conic through >= 6 planar points. The design matrix is
/// built on similarity-normalized coordinates with a sqrt(2) xy column so the
/// unit coefficient vector is rotation invariant.
ConicFit fit_conic(std::span<const Point2> points);

// --- 1-D solvers ---------------------------------------------------------------

struct RootResult {
  double t = 0.0;
  int iterations = 0;
};

/// Bisection on [lo, hi] with f(lo) f(hi) <= 0. Stops once |f(mid)| <= tol or
/// the bracket is no wider than tol. Throws BracketError without a sign change.
RootResult find_root(const ScalarFn& f, double lo, double hi, double tol);

/// Largest |sigma(t) + sigma(t + pi)| over `pairs` probes spread on [0, pi).
double oddness_defect(const ScalarFn& sigma, int pairs = 32);

/// Zero of a function with sigma(t + pi) = -sigma(t) on the circle: a sign
/// change must occur on [0, pi]. Returns t* in [0, pi] with |sigma(t*)| <= tol.
/// Throws ContractError when the 32-pair oddness probe fails.
double find_odd_zero(const ScalarFn& sigma, double tol);

struct Minimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a unimodal function on [lo, hi]. Runs until the
/// bracket stops shrinking in floating point (or max_iter).
Minimum minimize_unimodal(const ScalarFn& f, double lo, double hi, int max_iter = 160);

// --- sphere sampling -------------------------------------------------------------

enum class SphereStrategy { uniform_random, low_discrepancy, grid };

struct SphereSampling {
  SphereStrategy strategy = SphereStrategy::grid;
  std::uint64_t seed = 0;
};

/// `count` unit vectors in R^n, deterministic for a fixed strategy and seed.
///   grid:            n=2 equally spaced angles from 0; n=3 Fibonacci lattice;
///                    n=4 rank-1 lattice through the Hopf parametrization.
///   low_discrepancy: Halton points pushed through area-preserving maps.
///   uniform_random:  normalized Gaussian vectors from a seeded mt19937_64.
std::vector<Vec> sample_sphere(int n, int count, SphereSampling sampling);

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Mat random_orthogonal(int n, std::uint64_t seed);

/// Angle between two unit normals, ignoring orientation, in [0, pi/2].
double line_angle(const Vec& a, const Vec& b);
/// Angle between two vectors in [0, pi].
double vector_angle(const Vec& a, const Vec& b);

}  // namespace tomo
