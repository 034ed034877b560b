#include "tomoscope/geom.hpp"

#include "tomoscope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace tomo {

Vec make_vec(std::initializer_list<double> coords) {
  if (coords.size() == 0 || coords.size() > kMaxDim) throw InputError("vector length must be 1..4");
  Vec v(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double c : coords) v[i++] = c;
  return v;
}

Vec unit(const Vec& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InputError("cannot normalize a zero or non-finite vector");
  return v / n;
}

Vec perp(const Vec& v2) { return make_vec({-v2[1], v2[0]}); }

Hyperplane::Hyperplane(const Vec& n, double off) {
  const double len = n.norm();
  if (!(len > 0.0)) throw InputError("hyperplane normal must be nonzero");
  normal = n / len;
  offset = off / len;
}

Hyperplane Hyperplane::through(const Vec& n, const Vec& point) {
  const Vec u = unit(n);
  return {u, u.dot(point)};
}

FlatSpec::FlatSpec(Vec base, std::vector<Vec> dirs) : basepoint(std::move(base)) {
  for (const Vec& d : dirs) {
    if (d.size() != basepoint.size()) throw InputError("flat direction has wrong dimension");
    Vec r = d;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : directions) r -= r.dot(q) * q;
    const double len = r.norm();
    if (len < 1e-12 * std::max(1.0, d.norm())) throw InputError("flat directions are linearly dependent");
    directions.push_back(r / len);
  }
}

double FlatSpec::distance(const Vec& p) const {
  Vec r = p - basepoint;
  for (const Vec& q : directions) r -= r.dot(q) * q;
  return r.norm();
}

Mat complement_basis(std::span<const Vec> dirs, int n) {
  std::vector<Vec> span_set;
  for (const Vec& d : dirs) {
    Vec r = d;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : span_set) r -= r.dot(q) * q;
    const double len = r.norm();
    if (len < 1e-12) throw InputError("complement_basis: dependent directions");
    span_set.push_back(r / len);
  }
  const int k = n - static_cast<int>(span_set.size());
  Mat out(n, k);
  int filled = 0;
  std::vector<Vec> all = span_set;
  for (int axis = 0; axis < n && filled < k; ++axis) {
    Vec r = Vec::Unit(n, axis);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : all) r -= r.dot(q) * q;
    const double len = r.norm();
    if (len < 1e-6) continue;  // axis (numerically) inside the span
    r /= len;
    all.push_back(r);
    out.col(filled++) = r;
  }
  if (filled != k) throw InputError("complement_basis: could not complete basis");
  return out;
}

Mat complete_basis(const Vec& normal) {
  const Vec u = unit(normal);
  return complement_basis(std::span<const Vec>(&u, 1), static_cast<int>(u.size()));
}

Chart hyperplane_chart(const Hyperplane& h) {
  return Chart{h.offset * h.normal, complete_basis(h.normal)};
}

// --- plane fit -------------------------------------------------------------------

PlaneFit fit_plane(std::span<const Vec> points) {
  if (points.empty()) throw InputError("fit_plane: no points");
  const int n = static_cast<int>(points.front().size());
  const int m = static_cast<int>(points.size());
  if (m < n + 1) throw InputError("fit_plane: need at least n+1 points");
  Vec centroid = Vec::Zero(n);
  for (const Vec& p : points) centroid += p;
  centroid /= m;
  Eigen::MatrixXd centered(m, n);
  for (int i = 0; i < m; ++i) centered.row(i) = (points[i] - centroid).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, centroid.norm());
  if (s[0] <= 1e-14 * scale) throw InputError("fit_plane: all points identical");
  if (n >= 2 && s[n - 2] <= 1e-12 * s[0])
    throw DegenerateFitError("fit_plane: point cloud is rank deficient; normal undetermined");
  Vec normal = svd.matrixV().col(n - 1);
  double offset = normal.dot(centroid);
  // Deterministic orientation: positive offset, else first nonzero coordinate positive.
  bool flip = offset < 0.0;
  if (std::abs(offset) <= 1e-14 * scale) {
    flip = false;
    for (int i = 0; i < n; ++i)
      if (std::abs(normal[i]) > 1e-12) {
        flip = normal[i] < 0.0;
        break;
      }
  }
  if (flip) {
    normal = -normal;
    offset = -offset;
  }
  PlaneFit fit;
  fit.plane = Hyperplane(normal, offset);
  fit.residual = s[n - 1] / std::sqrt(static_cast<double>(m));
  fit.thickness_ratio = s[n - 1] / s[0];
  fit.centroid = centroid;
  return fit;
}

// --- conic fit -------------------------------------------------------------------

std::string to_string(ConicClass c) {
  switch (c) {
    case ConicClass::ellipse: return "ellipse";
    case ConicClass::parabola: return "parabola";
    case ConicClass::hyperbola: return "hyperbola";
    case ConicClass::degenerate: return "degenerate";
  }
  return "degenerate";
}

namespace {

constexpr double kConicTieBand = 1e-10;

double conic_value(const std::array<double, 6>& c, double x, double y) {
  return c[0] * x * x + c[1] * x * y + c[2] * y * y + c[3] * x + c[4] * y + c[5];
}

// Center of a central conic, if the quadratic part is invertible.
std::optional<Point2> conic_center(const std::array<double, 6>& c) {
  Eigen::Matrix2d q;
  q << 2 * c[0], c[1], c[1], 2 * c[2];
  const double det = q.determinant();
  if (std::abs(det) < 1e-300) return std::nullopt;
  return Point2(q.inverse() * Point2(-c[3], -c[4]));
}

ConicClass classify(const std::array<double, 6>& c) {
  const double quad = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
  const double disc = c[1] * c[1] - 4 * c[0] * c[2];
  if (std::abs(disc) < kConicTieBand) return quad < kConicTieBand ? ConicClass::degenerate : ConicClass::parabola;
  Eigen::Matrix3d m;
  m << c[0], c[1] / 2, c[3] / 2, c[1] / 2, c[2], c[4] / 2, c[3] / 2, c[4] / 2, c[5];
  if (std::abs(m.determinant()) < 1e-12) return ConicClass::degenerate;
  if (disc > 0) return ConicClass::hyperbola;
  const auto center = conic_center(c);
  if (!center) return ConicClass::degenerate;
  const double f0 = conic_value(c, center->x(), center->y());
  return c[0] * f0 < 0 ? ConicClass::ellipse : ConicClass::degenerate;  // else imaginary
}

}  // namespace

std::optional<EllipseShape> ConicFit::ellipse() const {
  if (kind != ConicClass::ellipse) return std::nullopt;
  const auto& c = coefficients;
  const auto center = conic_center(c);
  if (!center) return std::nullopt;
  const double f0 = conic_value(c, center->x(), center->y());
  Eigen::Matrix2d q;
  q << c[0], c[1] / 2, c[1] / 2, c[2];
  q /= -f0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(q);
  const auto& lam = eig.eigenvalues();  // ascending: lam[0] belongs to the major axis
  if (!(lam[0] > 0.0)) return std::nullopt;
  EllipseShape e;
  e.center = *center;
  e.semi_major = 1.0 / std::sqrt(lam[0]);
  e.semi_minor = 1.0 / std::sqrt(lam[1]);
  const Eigen::Vector2d major = eig.eigenvectors().col(0);
  e.angle = std::atan2(major.y(), major.x());
  return e;
}

ConicFit fit_conic(std::span<const Point2> points) {
  const int m = static_cast<int>(points.size());
  if (m < 6) throw InputError("fit_conic: need at least 6 points");
  Point2 mean = Point2::Zero();
  for (const auto& p : points) mean += p;
  mean /= m;
  // Collinearity check on the raw cloud.
  Eigen::MatrixXd centered(m, 2);
  for (int i = 0; i < m; ++i) centered.row(i) = (points[i] - mean).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> pca(centered);
  const double spread = pca.singularValues()[0];
  if (spread == 0.0 || pca.singularValues()[1] / std::sqrt(double(m)) <= 1e-12 * std::max(1.0, spread))
    throw DegenerateFitError("fit_conic: points are collinear");

  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - mean).norm();
  mean_dist /= m;
  const double s = std::sqrt(2.0) / mean_dist;

  Eigen::MatrixXd design(m, 6);
  for (int i = 0; i < m; ++i) {
    const double x = s * (points[i].x() - mean.x());
    const double y = s * (points[i].y() - mean.y());
    design.row(i) << x * x, std::sqrt(2.0) * x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd v = svd.matrixV().col(5);

  ConicFit fit;
  fit.residual = svd.singularValues()[5] / std::sqrt(static_cast<double>(m));

  // Normalized-frame coefficients in the standard layout, unit norm.
  std::array<double, 6> cn{v[0], std::sqrt(2.0) * v[1], v[2], v[3], v[4], v[5]};
  {
    double norm = 0.0;
    for (double x : cn) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : cn) x /= norm;
  }
  fit.discriminant = cn[1] * cn[1] - 4 * cn[0] * cn[2];
  fit.kind = classify(cn);

  // Back to original coordinates: x' = s (x - mx), y' = s (y - my).
  const double mx = mean.x(), my = mean.y(), s2 = s * s;
  std::array<double, 6> c{};
  c[0] = cn[0] * s2;
  c[1] = cn[1] * s2;
  c[2] = cn[2] * s2;
  c[3] = -2 * cn[0] * s2 * mx - cn[1] * s2 * my + cn[3] * s;
  c[4] = -2 * cn[2] * s2 * my - cn[1] * s2 * mx + cn[4] * s;
  c[5] = cn[0] * s2 * mx * mx + cn[1] * s2 * mx * my + cn[2] * s2 * my * my - cn[3] * s * mx -
         cn[4] * s * my + cn[5];
  double norm = 0.0;
  for (double x : c) norm += x * x;
  norm = std::sqrt(norm);
  double sign = (c[0] + c[2] < 0) ? -1.0 : 1.0;
  for (double& x : c) x *= sign / norm;
  fit.coefficients = c;
  return fit;
}

// --- 1-D solvers -------------------------------------------------------------------

namespace {

RootResult bisect(const ScalarFn& f, double lo, double hi, double flo, double fhi, double tol) {
  RootResult r;
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  while (hi - lo > tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    const double fm = f(mid);
    ++r.iterations;
    if (std::abs(fm) <= tol) return {mid, r.iterations};
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  r.t = std::abs(flo) <= std::abs(fhi) ? lo : hi;
  if (hi - lo <= tol) r.t = lo + 0.5 * (hi - lo);
  return r;
}

}  // namespace

RootResult find_root(const ScalarFn& f, double lo, double hi, double tol) {
  if (!(lo <= hi)) throw InputError("find_root: lo must not exceed hi");
  if (!(tol > 0.0)) throw InputError("find_root: tolerance must be positive");
  const double flo = f(lo), fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) throw BracketError("find_root: non-finite endpoint value");
  if (flo * fhi > 0.0) throw BracketError("find_root: no sign change on the bracket");
  return bisect(f, lo, hi, flo, fhi, tol);
}

double oddness_defect(const ScalarFn& sigma, int pairs) {
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const double t = kPi * k / pairs + 0.37 * kPi / pairs;  // off-grid so probes avoid scan nodes
    const double a = sigma(t), b = sigma(t + kPi);
    worst = std::max(worst, std::abs(a + b) / std::max({1.0, std::abs(a), std::abs(b)}));
  }
  return worst;
}

double find_odd_zero(const ScalarFn& sigma, double tol) {
  if (!(tol > 0.0)) throw InputError("find_odd_zero: tolerance must be positive");
  if (oddness_defect(sigma, 32) > 1e-9) throw ContractError("find_odd_zero: function is not odd under t -> t + pi");
  constexpr int kScan = 64;
  const double s0 = sigma(0.0);
  if (std::abs(s0) <= tol) return 0.0;
  double prev_t = 0.0, prev_v = s0;
  for (int j = 1; j <= kScan; ++j) {
    const double t = kPi * j / kScan;
    const double v = (j == kScan) ? -s0 : sigma(t);  // oddness pins sigma(pi) = -sigma(0)
    if (std::abs(v) <= tol && j < kScan) return t;
    if ((v < 0.0) != (prev_v < 0.0)) {
      const RootResult r = bisect(sigma, prev_t, t, prev_v, v, 1e-15);
      // Bisection with a tight width tolerance; confirm the value criterion.
      double best = r.t;
      if (std::abs(sigma(best)) > tol) {
        const RootResult r2 = bisect(sigma, prev_t, t, prev_v, v, tol);
        best = r2.t;
      }
      if (std::abs(sigma(best)) > tol && std::abs(-s0) > tol)
        throw SolverError("find_odd_zero: zero could not be resolved to tolerance");
      return best;
    }
    prev_t = t;
    prev_v = v;
  }
  throw SolverError("find_odd_zero: no sign change found");  // unreachable for odd functions
}

Minimum minimize_unimodal(const ScalarFn& f, double lo, double hi, int max_iter) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      if (!(c > a && c < d)) break;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      if (!(d > c && d < b)) break;
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

// --- sphere sampling ------------------------------------------------------------

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Uniform map from the unit cube to S^{n-1} for n = 2, 3, 4.
Vec cube_to_sphere(int n, double u1, double u2, double u3) {
  switch (n) {
    case 2: return make_vec({std::cos(2 * kPi * u1), std::sin(2 * kPi * u1)});
    case 3: {
      const double z = 1.0 - 2.0 * u1;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = 2 * kPi * u2;
      return make_vec({r * std::cos(phi), r * std::sin(phi), z});
    }
    case 4: {
      const double r1 = std::sqrt(1.0 - u1), r2 = std::sqrt(u1);
      const double t1 = 2 * kPi * u2, t2 = 2 * kPi * u3;
      return make_vec({r1 * std::sin(t1), r1 * std::cos(t1), r2 * std::sin(t2), r2 * std::cos(t2)});
    }
    default: throw InputError("sample_sphere: dimension must be 2, 3 or 4");
  }
}

}  // namespace

std::vector<Vec> sample_sphere(int n, int count, SphereSampling sampling) {
  if (n < 2 || n > kMaxDim) throw InputError("sample_sphere: dimension must be 2, 3 or 4");
  if (count < 1) throw InputError("sample_sphere: count must be >= 1");
  std::vector<Vec> out;
  out.reserve(count);
  switch (sampling.strategy) {
    case SphereStrategy::grid: {
      const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
      for (int i = 0; i < count; ++i) {
        if (n == 2) {
          const double a = 2 * kPi * i / count;
          out.push_back(make_vec({std::cos(a), std::sin(a)}));
        } else if (n == 3) {
          const double u1 = (i + 0.5) / count;
          const double u2 = std::fmod(i / golden, 1.0);
          out.push_back(cube_to_sphere(3, u1, u2, 0.0));
        } else {
          // R3 generalized-golden lattice (plastic-number constants).
          const double g = 1.2207440846057596;
          const double u1 = (i + 0.5) / count;
          const double u2 = std::fmod(0.5 + i / g, 1.0);
          const double u3 = std::fmod(0.5 + i / (g * g), 1.0);
          out.push_back(cube_to_sphere(4, u1, u2, u3));
        }
      }
      break;
    }
    case SphereStrategy::low_discrepancy: {
      for (int i = 0; i < count; ++i) {
        const auto k = static_cast<std::uint64_t>(i + 1);
        out.push_back(cube_to_sphere(n, radical_inverse(k, 2), radical_inverse(k, 3), radical_inverse(k, 5)));
      }
      break;
    }
    case SphereStrategy::uniform_random: {
      std::mt19937_64 rng(sampling.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      while (static_cast<int>(out.size()) < count) {
        Vec v(n);
        for (int j = 0; j < n; ++j) v[j] = gauss(rng);
        const double len = v.norm();
        if (len < 1e-12) continue;
        out.push_back(v / len);
      }
      break;
    }
  }
  // Re-normalize: trigonometric maps are accurate to a few ulps only.
  for (Vec& v : out) v /= v.norm();
  return out;
}

Mat random_orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return Mat(q);
}

double line_angle(const Vec& a, const Vec& b) {
  const double c = std::clamp(std::abs(a.dot(b)) / (a.norm() * b.norm()), 0.0, 1.0);
  // acos is ill-conditioned near 1; use the sine form for small angles.
  const double s = (a / a.norm() - std::copysign(1.0, a.dot(b)) * b / b.norm()).norm();
  return c > 0.9 ? 2.0 * std::asin(std::min(1.0, s / 2.0)) : std::acos(c);
}

double vector_angle(const Vec& a, const Vec& b) {
  const Vec ua = a / a.norm(), ub = b / b.norm();
  const double c = ua.dot(ub);
  if (std::abs(c) < 0.9) return std::acos(c);
  const double s = c > 0 ? (ua - ub).norm() : (ua + ub).norm();
  const double half = 2.0 * std::asin(std::min(1.0, s / 2.0));
  return c > 0 ? half : kPi - half;
}

}  // namespace tomo
