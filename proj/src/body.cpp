#include "tomoscope/body.hpp"

#include "tomoscope/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tomo {

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

namespace {

json plane_json(const Hyperplane& h) { return {{"normal", vec_json(h.normal)}, {"offset", h.offset}}; }

// Local minimization of fn over unit vectors near `start`, by cyclic golden
// searches along tangent coordinates with a shrinking window.
Vec local_sphere_min(const std::function<double(const Vec&)>& fn, const Vec& start, double window = 0.5,
                     int passes = 6) {
  Vec u = unit(start);
  const int n = static_cast<int>(u.size());
  for (int pass = 0; pass < passes; ++pass) {
    const Mat basis = complete_basis(u);
    for (int j = 0; j < n - 1; ++j) {
      const Vec dir = basis.col(j);
      const Minimum m = minimize_unimodal([&](double a) { return fn(unit(u + a * dir)); }, -window, window, 100);
      if (m.value <= fn(u)) u = unit(u + m.x * dir);
    }
    window *= 0.3;
  }
  return u;
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    case 4: return kPi * kPi / 2.0;
    default: throw InputError("unsupported dimension");
  }
}

void check_dim(int n) {
  if (n < 2 || n > kMaxDim) throw InputError("body dimension must be 2, 3 or 4");
}

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

}  // namespace

// --- Body defaults -----------------------------------------------------------

Vec Body::ray_exit(const Vec& origin, const Vec& direction) const {
  const Vec d = unit(direction);
  if (!contains(origin)) return origin;
  double hi = support(d) - origin.dot(d);
  if (hi <= 0.0) return origin;
  if (contains(origin + hi * d)) return origin + hi * d;
  double lo = 0.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (contains(origin + mid * d))
      lo = mid;
    else
      hi = mid;
  }
  return origin + (0.5 * (lo + hi)) * d;
}

Vec Body::normal_at(const Vec& p, const Vec& hint) const {
  return local_sphere_min([&](const Vec& v) { return support(v) - p.dot(v); }, hint);
}

double Body::outer_radius(int samples) const {
  const Vec z = interior_point();
  double r = 0.0;
  for (const Vec& u : probe_directions(dim(), samples)) r = std::max(r, support(u) - z.dot(u));
  return r;
}

std::vector<Vec> probe_directions(int n, int samples) {
  std::vector<Vec> dirs = sample_sphere(n, samples, {});
  for (int i = 0; i < n; ++i) {
    dirs.push_back(Vec::Unit(n, i));
    dirs.push_back(-Vec::Unit(n, i));
  }
  return dirs;
}

// --- Ball --------------------------------------------------------------------

Ball::Ball(Vec center, double radius) : center_(std::move(center)), radius_(radius) {
  check_dim(static_cast<int>(center_.size()));
  check_finite(center_, "ball center");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("ball radius must be positive");
}

Vec Ball::ray_exit(const Vec& origin, const Vec& direction) const {
  const Vec d = unit(direction);
  const Vec w = origin - center_;
  const double b = w.dot(d);
  const double disc = std::max(0.0, b * b - (w.squaredNorm() - radius_ * radius_));
  return origin + std::max(0.0, -b + std::sqrt(disc)) * d;
}

Vec Ball::normal_at(const Vec& p, const Vec& hint) const {
  const Vec w = p - center_;
  return w.norm() > 0.0 ? Vec(w / w.norm()) : unit(hint);
}

json Ball::describe() const { return {{"kind", "ball"}, {"center", vec_json(center_)}, {"radius", radius_}}; }

// --- Ellipsoid -------------------------------------------------------------------

Ellipsoid::Ellipsoid(Vec center, Mat shape) : center_(std::move(center)), shape_(std::move(shape)) {
  const int n = static_cast<int>(center_.size());
  check_dim(n);
  check_finite(center_, "ellipsoid center");
  if (shape_.rows() != n || shape_.cols() != n) throw InputError("ellipsoid shape matrix has wrong size");
  if (!shape_.allFinite()) throw InputError("ellipsoid shape matrix has non-finite entries");
  if ((shape_ - shape_.transpose()).norm() > 1e-12 * std::max(1.0, shape_.norm()))
    throw InputError("ellipsoid shape matrix must be symmetric");
  shape_ = 0.5 * (shape_ + shape_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(shape_);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw InputError("ellipsoid shape matrix must be positive definite");
  inverse_ = shape_.inverse();
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
}

double Ellipsoid::support(const Vec& u) const { return center_.dot(u) + std::sqrt(u.dot(inverse_ * u)); }

Vec Ellipsoid::support_point(const Vec& u) const {
  const Vec w = inverse_ * u;
  return center_ + w / std::sqrt(u.dot(w));
}

bool Ellipsoid::contains(const Vec& p) const {
  const Vec w = p - center_;
  return w.dot(shape_ * w) <= 1.0;
}

Vec Ellipsoid::ray_exit(const Vec& origin, const Vec& direction) const {
  const Vec d = unit(direction);
  const Vec w = origin - center_;
  const Vec ad = shape_ * d;
  const double a = d.dot(ad), b = w.dot(ad), c = w.dot(shape_ * w) - 1.0;
  const double disc = std::max(0.0, b * b - a * c);
  // Numerically stable root of a t^2 + 2 b t + c = 0 with the larger t.
  double t;
  if (b <= 0.0)
    t = (-b + std::sqrt(disc)) / a;
  else
    t = -c / (b + std::sqrt(disc));
  return origin + std::max(0.0, t) * d;
}

Vec Ellipsoid::normal_at(const Vec& p, const Vec& hint) const {
  const Vec g = shape_ * (p - center_);
  return g.norm() > 0.0 ? Vec(g / g.norm()) : unit(hint);
}

Vec Ellipsoid::semi_axes() const {
  Eigen::SelfAdjointEigenSolver<Mat> eig(shape_);
  Vec axes = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  std::sort(axes.data(), axes.data() + axes.size());
  return axes;
}

double Ellipsoid::volume() const { return unit_ball_volume(dim()) / std::sqrt(shape_.determinant()); }

Hyperplane Ellipsoid::polar_plane(const Vec& x) const {
  const Vec g = shape_ * (x - center_);
  return Hyperplane(g, g.dot(center_) + 1.0);
}

Hyperplane Ellipsoid::shadow_plane(const Vec& u) const {
  const Vec g = shape_ * u;
  return Hyperplane(g, g.dot(center_));
}

json Ellipsoid::describe() const {
  return {{"kind", "ellipsoid"}, {"center", vec_json(center_)}, {"shape", mat_json(shape_)}};
}

// --- PolytopeV -----------------------------------------------------------------

namespace {

void for_each_subset(int m, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<Vec> ccw_ring(std::vector<Vec> pts, const Vec& center) {
  std::sort(pts.begin(), pts.end(), [&](const Vec& a, const Vec& b) {
    return std::atan2(a[1] - center[1], a[0] - center[0]) < std::atan2(b[1] - center[1], b[0] - center[0]);
  });
  return pts;
}

}  // namespace

PolytopeV::PolytopeV(std::vector<Vec> points) : input_(std::move(points)) {
  if (input_.empty()) throw InputError("polytope needs vertices");
  dim_ = static_cast<int>(input_.front().size());
  check_dim(dim_);
  const int m = static_cast<int>(input_.size());
  if (m < dim_ + 1) throw InputError("polytope needs at least n+1 vertices");
  Vec mean = Vec::Zero(dim_);
  for (const Vec& p : input_) {
    if (p.size() != dim_) throw InputError("polytope vertices have mixed dimensions");
    check_finite(p, "polytope vertex");
    mean += p;
  }
  mean /= m;
  scale_ = 0.0;
  for (const Vec& p : input_) scale_ = std::max(scale_, (p - mean).norm());
  if (!(scale_ > 0.0)) throw InputError("polytope vertices coincide");
  const double tol = 1e-10 * scale_;

  double subsets = 1.0;
  for (int i = 0; i < dim_; ++i) subsets *= double(m - i) / double(i + 1);
  if (subsets > 2e5) throw InputError("polytope has too many vertices for facet enumeration");

  for_each_subset(m, dim_, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd rows(dim_ - 1, dim_);
    for (int i = 1; i < dim_; ++i) rows.row(i - 1) = (input_[idx[i]] - input_[idx[0]]).transpose();
    Vec normal;
    if (dim_ == 2) {
      normal = perp(rows.row(0).transpose());
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
      if (svd.singularValues()[dim_ - 2] <= 1e-12 * scale_) return;
      normal = svd.matrixV().col(dim_ - 1);
    }
    if (normal.norm() <= 1e-12 * scale_) return;
    normal /= normal.norm();
    double offset = normal.dot(input_[idx[0]]);
    double lo = 0.0, hi = 0.0;
    for (const Vec& p : input_) {
      const double s = normal.dot(p) - offset;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (hi > tol && lo < -tol) return;
    if (hi <= tol && lo >= -tol) return;  // all points coplanar
    if (hi > tol) {
      normal = -normal;
      offset = -offset;
    }
    for (const Hyperplane& f : facets_)
      if (f.normal.dot(normal) > 1.0 - 1e-9 && std::abs(f.offset - offset) <= tol) return;
    facets_.push_back(Hyperplane(normal, offset));
  });
  if (static_cast<int>(facets_.size()) < dim_ + 1) throw InputError("polytope hull is not full-dimensional");

  for (int i = 0; i < m; ++i) {
    bool duplicate = false;
    for (int j = 0; j < i && !duplicate; ++j) duplicate = (input_[i] - input_[j]).norm() <= tol;
    if (duplicate) continue;
    std::vector<Vec> active;
    for (const Hyperplane& f : facets_)
      if (std::abs(f.signed_distance(input_[i])) <= tol) active.push_back(f.normal);
    if (static_cast<int>(active.size()) < dim_) continue;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(active.size()), dim_);
    for (std::size_t k = 0; k < active.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = active[k].transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-9);
    if (lu.rank() == dim_) vertices_.push_back(input_[i]);
  }
  interior_ = Vec::Zero(dim_);
  for (const Vec& v : vertices_) interior_ += v;
  interior_ /= static_cast<double>(vertices_.size());
  for (const Hyperplane& f : facets_)
    if (f.signed_distance(interior_) > -tol) throw InputError("polytope hull is not full-dimensional");
}

double PolytopeV::support(const Vec& u) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& v : vertices_) best = std::max(best, v.dot(u));
  return best;
}

Vec PolytopeV::support_point(const Vec& u) const {
  const double h = support(u);
  Vec sum = Vec::Zero(dim_);
  int count = 0;
  for (const Vec& v : vertices_)
    if (v.dot(u) >= h - 1e-12 * scale_) {
      sum += v;
      ++count;
    }
  return sum / count;
}

bool PolytopeV::contains(const Vec& p) const {
  for (const Hyperplane& f : facets_)
    if (f.signed_distance(p) > 1e-12 * scale_) return false;
  return true;
}

Vec PolytopeV::ray_exit(const Vec& origin, const Vec& direction) const {
  const Vec d = unit(direction);
  double t = std::numeric_limits<double>::infinity();
  for (const Hyperplane& f : facets_) {
    const double rate = f.normal.dot(d);
    if (rate > 1e-15) t = std::min(t, -f.signed_distance(origin) / rate);
  }
  return origin + std::max(0.0, t) * d;
}

Vec PolytopeV::normal_at(const Vec& p, const Vec& hint) const {
  if (hint.size() == dim_ && hint.norm() > 0.0) {
    const Vec u = unit(hint);
    if (support(u) - p.dot(u) <= 1e-9 * scale_) return u;
  }
  Vec sum = Vec::Zero(dim_);
  double nearest = std::numeric_limits<double>::infinity();
  Vec nearest_normal;
  for (const Hyperplane& f : facets_) {
    const double gap = std::abs(f.signed_distance(p));
    if (gap <= 1e-9 * scale_) sum += f.normal;
    if (gap < nearest) {
      nearest = gap;
      nearest_normal = f.normal;
    }
  }
  return sum.norm() > 1e-12 ? Vec(sum / sum.norm()) : nearest_normal;
}

double PolytopeV::volume() const {
  if (dim_ == 2) {
    const std::vector<Vec> ring = ccw_ring(vertices_, interior_);
    double area = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec& a = ring[i];
      const Vec& b = ring[(i + 1) % ring.size()];
      area += a[0] * b[1] - a[1] * b[0];
    }
    return 0.5 * std::abs(area);
  }
  double vol = 0.0;
  if (dim_ != 3) throw UnsupportedError("exact polytope volume is implemented for dimensions 2 and 3");
  const double tol = 1e-10 * scale_;
  for (const Hyperplane& f : facets_) {
    std::vector<Vec> face;
    for (const Vec& v : vertices_)
      if (std::abs(f.signed_distance(v)) <= tol) face.push_back(v);
    Vec fc = Vec::Zero(3);
    for (const Vec& v : face) fc += v;
    fc /= static_cast<double>(face.size());
    const Mat basis = complete_basis(f.normal);
    std::sort(face.begin(), face.end(), [&](const Vec& a, const Vec& b) {
      const Vec la = basis.transpose() * (a - fc), lb = basis.transpose() * (b - fc);
      return std::atan2(la[1], la[0]) < std::atan2(lb[1], lb[0]);
    });
    const double height = -f.signed_distance(interior_);
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vec& a = face[i];
      const Vec& b = face[(i + 1) % face.size()];
      const Eigen::Vector3d e1 = a - fc, e2 = b - fc;
      vol += e1.cross(e2).norm() / 2.0 * height / 3.0;
    }
  }
  return vol;
}

Vec PolytopeV::centroid() const {
  if (dim_ == 2) {
    const std::vector<Vec> ring = ccw_ring(vertices_, interior_);
    double area = 0.0;
    Vec c = Vec::Zero(2);
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec& a = ring[i];
      const Vec& b = ring[(i + 1) % ring.size()];
      const double cr = a[0] * b[1] - a[1] * b[0];
      area += cr;
      c += cr * (a + b);
    }
    return c / (3.0 * area);
  }
  if (dim_ != 3) throw UnsupportedError("exact polytope centroid is implemented for dimensions 2 and 3");
  const double tol = 1e-10 * scale_;
  double vol = 0.0;
  Vec c = Vec::Zero(3);
  for (const Hyperplane& f : facets_) {
    std::vector<Vec> face;
    for (const Vec& v : vertices_)
      if (std::abs(f.signed_distance(v)) <= tol) face.push_back(v);
    Vec fc = Vec::Zero(3);
    for (const Vec& v : face) fc += v;
    fc /= static_cast<double>(face.size());
    const Mat basis = complete_basis(f.normal);
    std::sort(face.begin(), face.end(), [&](const Vec& a, const Vec& b) {
      const Vec la = basis.transpose() * (a - fc), lb = basis.transpose() * (b - fc);
      return std::atan2(la[1], la[0]) < std::atan2(lb[1], lb[0]);
    });
    const double height = -f.signed_distance(interior_);
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vec& a = face[i];
      const Vec& b = face[(i + 1) % face.size()];
      const Eigen::Vector3d e1 = a - fc, e2 = b - fc;
      const double tet = e1.cross(e2).norm() / 2.0 * height / 3.0;
      vol += tet;
      c += tet * (interior_ + fc + a + b) / 4.0;
    }
  }
  return c / vol;
}

json PolytopeV::describe() const {
  json verts = json::array();
  for (const Vec& v : input_) verts.push_back(vec_json(v));
  return {{"kind", "polytope"}, {"vertices", verts}};
}

// --- PerturbedBall -------------------------------------------------------------

PerturbedBall::PerturbedBall(Vec center, double radius, double amplitude, std::vector<HarmonicMode> modes)
    : center_(std::move(center)), radius_(radius), amplitude_(amplitude), modes_(std::move(modes)) {
  const int n = static_cast<int>(center_.size());
  if (n != 2 && n != 3) throw InputError("perturbed-ball is implemented in dimensions 2 and 3");
  check_finite(center_, "perturbed-ball center");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("perturbed-ball radius must be positive");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw InputError("perturbed-ball amplitude must be >= 0");
  for (const HarmonicMode& mode : modes_) {
    if (n == 2) {
      polys_.push_back(planar_harmonic(mode.m) * mode.coef);
      degrees_.push_back(std::abs(mode.m));
    } else {
      if (mode.l < 0 || std::abs(mode.m) > mode.l) throw InputError("perturbed-ball mode needs |m| <= l");
      polys_.push_back(solid_harmonic(mode.l, mode.m) * mode.coef);
      degrees_.push_back(mode.l);
    }
  }

  std::vector<Vec> grid;
  if (n == 2) {
    for (int k = 0; k < 720; ++k) {
      const double a = 2 * kPi * k / 720;
      grid.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
  } else {
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 80; ++j) {
        const double th = kPi * (i + 0.5) / 40, ph = 2 * kPi * j / 80;
        grid.push_back(make_vec({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)}));
      }
  }
  scale_ = 1.0;
  if (!polys_.empty()) {
    double sup = 0.0;
    for (const Vec& u : grid) {
      double f = 0.0;
      for (const Polynomial& p : polys_) f += p.eval(u);
      sup = std::max(sup, std::abs(f));
    }
    if (sup < 1e-12) throw InputError("perturbed-ball modes vanish on the sphere");
    scale_ = sup;
  }
  min_radius_of_curvature_ = std::numeric_limits<double>::infinity();
  for (const Vec& u : grid) {
    const Mat basis = complete_basis(u);
    const Mat t = basis.transpose() * support_hessian(u) * basis;
    Eigen::SelfAdjointEigenSolver<Mat> eig(t);
    min_radius_of_curvature_ = std::min(min_radius_of_curvature_, eig.eigenvalues().minCoeff());
  }
  if (!(min_radius_of_curvature_ > 1e-9 * radius_))
    throw GeometryError("perturbed-ball fails the convexity certificate: min radius of curvature " +
                        std::to_string(min_radius_of_curvature_));
}

double PerturbedBall::profile(const Vec& u) const {
  double f = 0.0;
  for (const Polynomial& p : polys_) f += p.eval(u);
  return f / scale_;
}

double PerturbedBall::support(const Vec& u) const {
  return center_.dot(u) + radius_ + amplitude_ * profile(u);
}

Vec PerturbedBall::support_point(const Vec& u) const {
  Vec s = center_ + radius_ * u;
  for (std::size_t j = 0; j < polys_.size(); ++j) {
    const double l = degrees_[j];
    s += (amplitude_ / scale_) * (polys_[j].gradient(u) + (1.0 - l) * polys_[j].eval(u) * u);
  }
  return s;
}

Mat PerturbedBall::support_hessian(const Vec& u) const {
  const int n = dim();
  const Mat id = Mat::Identity(n, n);
  const Mat uu = u * u.transpose();
  Mat h = radius_ * (id - uu);
  for (std::size_t j = 0; j < polys_.size(); ++j) {
    const double l = degrees_[j];
    const Vec g = polys_[j].gradient(u);
    const double p = polys_[j].eval(u);
    const Mat gu = g * u.transpose();
    h += (amplitude_ / scale_) *
         (polys_[j].hessian(u) + (1.0 - l) * (gu + gu.transpose()) + (1.0 - l) * p * (id - (l + 1.0) * uu));
  }
  return h;
}

std::optional<Vec> PerturbedBall::invert_gauss_map(const Vec& origin, const Vec& w0) const {
  const Vec w = unit(w0);
  const Mat e = complete_basis(w);
  const int k = dim() - 1;
  Vec a = Vec::Zero(k);
  auto residual = [&](const Vec& aa, Vec* u_out) {
    const Vec raw = w + e * aa;
    const Vec u = raw / raw.norm();
    if (u_out) *u_out = u;
    return Vec(e.transpose() * (support_point(u) - origin));
  };
  Vec u;
  Vec g = residual(a, &u);
  const double tol = 1e-14 * (1.0 + radius_ + center_.norm());
  for (int it = 0; it < 60 && g.norm() > tol; ++it) {
    const Vec raw = w + e * a;
    const Mat jac = e.transpose() * support_hessian(u) * e / raw.norm();
    const Vec step = jac.fullPivLu().solve(g);
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vec u_try;
      const Vec a_try = a - lambda * step;
      const Vec g_try = residual(a_try, &u_try);
      if (g_try.norm() < g.norm()) {
        a = a_try;
        g = g_try;
        u = u_try;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (g.norm() > 1e-10 * (1.0 + radius_)) return std::nullopt;
  if ((support_point(u) - origin).dot(w) <= 0.0) return std::nullopt;
  return u;
}

bool PerturbedBall::contains(const Vec& p) const {
  const Vec w = p - center_;
  const double d = w.norm();
  if (d <= radius_ - 1.05 * amplitude_) return true;
  if (d >= radius_ + 1.05 * amplitude_) return false;
  if (const auto u = invert_gauss_map(center_, w)) return d <= (support_point(*u) - center_).norm();
  const Vec v = local_sphere_min([&](const Vec& q) { return support(q) - p.dot(q); }, w);
  return support(v) - p.dot(v) >= 0.0;
}

Vec PerturbedBall::ray_exit(const Vec& origin, const Vec& direction) const {
  if (const auto u = invert_gauss_map(origin, direction)) return support_point(*u);
  return Body::ray_exit(origin, direction);
}

Vec PerturbedBall::normal_at(const Vec& p, const Vec& hint) const {
  const Vec w = p - center_;
  if (w.norm() > 0.0)
    if (const auto u = invert_gauss_map(center_, w)) return *u;
  return Body::normal_at(p, hint);
}

json PerturbedBall::describe() const {
  json modes = json::array();
  for (const HarmonicMode& m : modes_) {
    if (dim() == 2)
      modes.push_back({{"m", m.m}, {"coef", m.coef}});
    else
      modes.push_back({{"l", m.l}, {"m", m.m}, {"coef", m.coef}});
  }
  return {{"kind", "perturbed-ball"},
          {"center", vec_json(center_)},
          {"radius", radius_},
          {"amplitude", amplitude_},
          {"modes", modes}};
}

// --- SectionBody -----------------------------------------------------------------

SectionBody::SectionBody(BodyPtr parent, Hyperplane plane)
    : parent_(std::move(parent)), plane_(std::move(plane)) {
  if (parent_->dim() < 3) throw InputError("sections need a body of dimension >= 3");
  if (plane_.dim() != parent_->dim()) throw InputError("section plane has wrong dimension");
  const Vec& nu = plane_.normal;
  const double top = parent_->support(nu), bottom = -parent_->support(-nu);
  const double eps = 1e-12 * std::max(1.0, top - bottom);
  if (!(plane_.offset < top - eps && plane_.offset > bottom + eps))
    throw EmptySectionError("hyperplane does not meet the interior of the body");
  chart_ = hyperplane_chart(plane_);
  const Vec z = parent_->interior_point();
  const double dz = plane_.signed_distance(z);
  Vec q = z;
  if (std::abs(dz) > 1e-14) {
    const Vec s = parent_->support_point(dz > 0.0 ? Vec(-nu) : nu);
    const double ds = plane_.signed_distance(s);
    q = z + (dz / (dz - ds)) * (s - z);
  }
  interior_ = chart_.to_local(q);
}

Vec SectionBody::support_point(const Vec& w) const {
  const Vec dir = chart_.dir_to_world(w);
  const Vec& nu = plane_.normal;
  auto at = [&](double phi) { return parent_->support_point(Vec(std::cos(phi) * dir + std::sin(phi) * nu)); };
  double lo = -kPi / 2, hi = kPi / 2;
  Vec plo = at(lo), phi_pt = at(hi);
  double glo = plane_.signed_distance(plo), ghi = plane_.signed_distance(phi_pt);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Vec pm = at(mid);
    const double gm = plane_.signed_distance(pm);
    if (gm < 0.0) {
      lo = mid;
      plo = pm;
      glo = gm;
    } else {
      hi = mid;
      phi_pt = pm;
      ghi = gm;
    }
  }
  Vec p = plo;
  if (ghi - glo > 0.0) p = plo + (-glo / (ghi - glo)) * (phi_pt - plo);
  p = plane_.project(p);
  return chart_.to_local(p);
}

double SectionBody::support(const Vec& w) const { return support_point(w).dot(w); }

Vec SectionBody::ray_exit(const Vec& origin, const Vec& direction) const {
  return chart_.to_local(parent_->ray_exit(chart_.to_world(origin), chart_.dir_to_world(direction)));
}

Vec SectionBody::normal_at(const Vec& p, const Vec& hint) const {
  const Vec nk = parent_->normal_at(chart_.to_world(p), chart_.dir_to_world(hint));
  const Vec local = chart_.dir_to_local(nk);
  if (local.norm() < 1e-9) return Body::normal_at(p, hint);
  return local / local.norm();
}

json SectionBody::describe() const {
  return {{"kind", "section"}, {"parent", parent_->describe()}, {"plane", plane_json(plane_)}};
}

// --- ProjectionBody ------------------------------------------------------------

ProjectionBody::ProjectionBody(BodyPtr parent, Vec direction) : parent_(std::move(parent)) {
  if (parent_->dim() < 3) throw InputError("projections need a body of dimension >= 3");
  direction_ = unit(direction);
  chart_ = Chart{Vec::Zero(parent_->dim()), complete_basis(direction_)};
}

Vec ProjectionBody::support_point(const Vec& w) const {
  return chart_.to_local(parent_->support_point(chart_.dir_to_world(w)));
}

bool ProjectionBody::contains(const Vec& p) const {
  auto gap = [&](const Vec& v) { return support(v) - p.dot(v); };
  const int k = dim();
  const auto dirs = sample_sphere(k, k == 2 ? 128 : 512, {});
  std::vector<std::pair<double, int>> values;
  for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
    const double g = gap(dirs[i]);
    if (g < 0.0) return false;
    values.emplace_back(g, i);
  }
  std::partial_sort(values.begin(), values.begin() + 3, values.end());
  for (int j = 0; j < 3; ++j) {
    const Vec v = local_sphere_min(gap, dirs[values[j].second], 0.1);
    if (gap(v) < 0.0) return false;
  }
  return true;
}

json ProjectionBody::describe() const {
  return {{"kind", "projection"}, {"parent", parent_->describe()}, {"direction", vec_json(direction_)}};
}

// --- AffineBody ------------------------------------------------------------------

AffineBody::AffineBody(BodyPtr parent, Mat linear, Vec shift)
    : parent_(std::move(parent)), linear_(std::move(linear)), shift_(std::move(shift)) {
  const int n = parent_->dim();
  if (linear_.rows() != n || linear_.cols() != n || shift_.size() != n)
    throw InputError("affine map has wrong dimensions");
  if (std::abs(linear_.determinant()) < 1e-12) throw InputError("affine map must be invertible");
  inverse_ = linear_.inverse();
}

double AffineBody::support(const Vec& u) const {
  const Vec v = linear_.transpose() * u;
  const double len = v.norm();
  return len * parent_->support(v / len) + shift_.dot(u);
}

Vec AffineBody::support_point(const Vec& u) const {
  const Vec v = linear_.transpose() * u;
  return linear_ * parent_->support_point(v / v.norm()) + shift_;
}

bool AffineBody::contains(const Vec& p) const { return parent_->contains(inverse_ * (p - shift_)); }

Vec AffineBody::ray_exit(const Vec& origin, const Vec& direction) const {
  const Vec o = inverse_ * (origin - shift_);
  const Vec d = inverse_ * direction;
  return linear_ * parent_->ray_exit(o, unit(d)) + shift_;
}

Vec AffineBody::normal_at(const Vec& p, const Vec& hint) const {
  const Vec q = inverse_ * (p - shift_);
  const Vec h = unit(Vec(linear_.transpose() * hint));
  const Vec nk = parent_->normal_at(q, h);
  return unit(Vec(inverse_.transpose() * nk));
}

json AffineBody::describe() const {
  return {{"kind", "affine"}, {"parent", parent_->describe()}, {"linear", mat_json(linear_)}, {"shift", vec_json(shift_)}};
}

// --- operations ------------------------------------------------------------------

Section section(const BodyPtr& body, const Hyperplane& plane) {
  if (body->dim() < 3) throw InputError("sections need a body of dimension >= 3");
  if (plane.dim() != body->dim()) throw InputError("section plane has wrong dimension");
  const Chart chart = hyperplane_chart(plane);
  if (const auto* ball = dynamic_cast<const Ball*>(body.get())) {
    const double d = plane.signed_distance(ball->center());
    if (std::abs(d) >= ball->radius() * (1.0 - 1e-12))
      throw EmptySectionError("hyperplane does not meet the interior of the body");
    return {std::make_shared<Ball>(chart.to_local(ball->center()), std::sqrt(ball->radius() * ball->radius() - d * d)),
            chart};
  }
  if (const auto* ell = dynamic_cast<const Ellipsoid*>(body.get())) {
    const Mat& a = ell->shape();
    const Mat& b = chart.basis;
    const Vec oc = chart.origin - ell->center();
    const Mat m = b.transpose() * a * b;
    const Vec v0 = -m.ldlt().solve(Vec(b.transpose() * (a * oc)));
    const double k = 1.0 - oc.dot(a * oc) + v0.dot(m * v0);
    if (!(k > 1e-12)) throw EmptySectionError("hyperplane does not meet the interior of the body");
    return {std::make_shared<Ellipsoid>(v0, Mat(m / k)), chart};
  }
  return {std::make_shared<SectionBody>(body, plane), chart};
}

Projection orth_project(const BodyPtr& body, const Vec& u) {
  if (body->dim() < 3) throw InputError("projections need a body of dimension >= 3");
  if (u.size() != body->dim()) throw InputError("projection direction has wrong dimension");
  const Vec d = unit(u);
  const Chart chart{Vec::Zero(body->dim()), complete_basis(d)};
  const Mat& b = chart.basis;
  if (const auto* ball = dynamic_cast<const Ball*>(body.get()))
    return {std::make_shared<Ball>(Vec(b.transpose() * ball->center()), ball->radius()), chart};
  if (const auto* ell = dynamic_cast<const Ellipsoid*>(body.get())) {
    const Mat inv = b.transpose() * ell->shape_inverse() * b;
    return {std::make_shared<Ellipsoid>(Vec(b.transpose() * ell->center()), Mat(inv.inverse())), chart};
  }
  if (const auto* poly = dynamic_cast<const PolytopeV*>(body.get())) {
    std::vector<Vec> pts;
    for (const Vec& v : poly->vertices()) pts.push_back(b.transpose() * v);
    return {std::make_shared<PolytopeV>(pts), chart};
  }
  return {std::make_shared<ProjectionBody>(body, d), chart};
}

BodyPtr affine_image(const BodyPtr& body, const Mat& linear, const Vec& shift) {
  const int n = body->dim();
  if (linear.rows() != n || linear.cols() != n || shift.size() != n) throw InputError("affine map has wrong dimensions");
  if (std::abs(linear.determinant()) < 1e-12) throw InputError("affine map must be invertible");
  const Mat inv = linear.inverse();
  if (const auto* ball = dynamic_cast<const Ball*>(body.get())) {
    const Mat g = linear.transpose() * linear;
    const double s2 = g.trace() / n;
    const Vec c = linear * ball->center() + shift;
    if ((g - s2 * Mat::Identity(n, n)).norm() <= 1e-12 * s2) return std::make_shared<Ball>(c, ball->radius() * std::sqrt(s2));
    return std::make_shared<Ellipsoid>(c, Mat(inv.transpose() * inv / (ball->radius() * ball->radius())));
  }
  if (const auto* ell = dynamic_cast<const Ellipsoid*>(body.get())) {
    Mat a = inv.transpose() * ell->shape() * inv;
    a = 0.5 * (a + a.transpose()).eval();
    return std::make_shared<Ellipsoid>(Vec(linear * ell->center() + shift), a);
  }
  if (const auto* poly = dynamic_cast<const PolytopeV*>(body.get())) {
    std::vector<Vec> pts;
    for (const Vec& v : poly->vertices()) pts.push_back(linear * v + shift);
    return std::make_shared<PolytopeV>(pts);
  }
  return std::make_shared<AffineBody>(body, linear, shift);
}

namespace {

struct Oriented {
  Vec nu;
  double b;
  double depth;  // <x, nu> - b > 0
};

Oriented orient_toward(const Hyperplane& plane, const Vec& x) {
  Oriented o{plane.normal, plane.offset, plane.signed_distance(x)};
  if (o.depth < 0.0) {
    o.nu = -o.nu;
    o.b = -o.b;
    o.depth = -o.depth;
  }
  if (!(o.depth > 1e-14 * std::max(1.0, x.norm()))) throw InputError("projection plane passes through the apex");
  return o;
}

// Root s* of phi(s) = H_K(w - s nu) - <x, w> + s <x, nu>; returns the unit
// normal w - s* nu normalized, and s*.
std::pair<Vec, double> tangent_normal(const Body& body, const Vec& x, const Oriented& o, const Vec& w) {
  const double xw = x.dot(w), xn = x.dot(o.nu);
  auto phi = [&](double s) {
    const Vec m = w - s * o.nu;
    const double len = m.norm();
    return len * body.support(m / len) - xw + s * xn;
  };
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 80 && phi(lo) > 0.0; ++i) lo *= 2.0;
  for (int i = 0; i < 80 && phi(hi) < 0.0; ++i) hi *= 2.0;
  const RootResult r = find_root(phi, lo, hi, 1e-15);
  return {unit(Vec(w - r.t * o.nu)), r.t};
}

}  // namespace

double central_image_support(const Body& body, const Vec& x, const Hyperplane& plane, const Vec& w) {
  const Oriented o = orient_toward(plane, x);
  if (body.support(o.nu) >= x.dot(o.nu)) throw ProjectionOverflowError("some ray from the apex through the body misses the plane");
  const Vec wt = unit(Vec(w - w.dot(o.nu) * o.nu));
  const double s = tangent_normal(body, x, o, wt).second;
  return x.dot(wt) - s * o.depth;
}

CentralProjection central_project(const BodyPtr& body, const Vec& x, const Hyperplane& plane, int count) {
  const int n = body->dim();
  if (x.size() != n || plane.dim() != n) throw InputError("central projection inputs have wrong dimensions");
  if (body->contains(x)) throw ApexError("apex lies in the body");
  const Oriented o = orient_toward(plane, x);
  if (body->support(o.nu) >= x.dot(o.nu))
    throw ProjectionOverflowError("some ray from the apex through the body misses the plane");
  CentralProjection out;
  out.chart = hyperplane_chart(plane);
  if (n == 2) {
    out.directions = {make_vec({-1.0}), make_vec({1.0})};
  } else {
    out.directions = sample_sphere(n - 1, count, {});
  }
  for (const Vec& wl : out.directions) {
    const Vec w = out.chart.dir_to_world(wl);
    const auto [m, s] = tangent_normal(*body, x, o, w);
    const double h = x.dot(w) - s * o.depth - out.chart.origin.dot(w);
    out.support.push_back(h);
    const Vec y = body->support_point(m);
    const double denom = (y - x).dot(o.nu);
    const Vec z = x + (-o.depth / denom) * (y - x);
    out.boundary.push_back(out.chart.to_local(z));
  }
  if (n == 2) {
    out.a = make_vec({-out.support[0]});
    out.b = make_vec({out.support[1]});
    out.length = out.support[0] + out.support[1];
  }
  return out;
}

// --- centroid / nesting ----------------------------------------------------------

std::optional<Chord> chord(const Body& body, const Vec& u, double s) {
  if (body.dim() != 2) throw InputError("chords need a planar body");
  const double top = body.support(u), bottom = -body.support(-u);
  if (!(s < top && s > bottom)) return std::nullopt;
  const Vec z = body.interior_point();
  const double sz = z.dot(u);
  Vec m = z;
  if (s != sz) {
    const Vec p = body.support_point(s > sz ? u : Vec(-u));
    m = z + ((s - sz) / (p.dot(u) - sz)) * (p - z);
  }
  const Vec t = perp(u);
  return Chord{body.ray_exit(m, -t), body.ray_exit(m, t)};
}

double chord_length(const Body& body, const Vec& u, double s) {
  const auto c = chord(body, u, s);
  return c ? (c->b - c->a).norm() : 0.0;
}

Integral chord_integral(const Body& body, const Vec& u, double lo, double hi, int power, double tol) {
  Integral out;
  if (!(hi > lo)) return out;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  auto f = [&](double tau) {
    const double s = mid - half * std::cos(kPi * tau);
    const double len = chord_length(body, u, s);
    double sp = 1.0;
    for (int i = 0; i < power; ++i) sp *= s;
    return sp * len * half * kPi * std::sin(kPi * tau);
  };
  double err = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, tol, &err);
  out.error = err;
  return out;
}

CentroidResult centroid(const Body& body, const CentroidOptions& options) {
  const int n = body.dim();
  CentroidResult out;
  if (options.method == CentroidMethod::exact_2d) {
    if (n != 2) throw InputError("exact_2d centroid needs a planar body");
    const Vec e1 = make_vec({1, 0}), e2 = make_vec({0, 1});
    const double x0 = -body.support(-e1), x1 = body.support(e1);
    const double y0 = -body.support(-e2), y1 = body.support(e2);
    const Integral area = chord_integral(body, e1, x0, x1, 0);
    const Integral mx = chord_integral(body, e1, x0, x1, 1);
    const Integral my = chord_integral(body, e2, y0, y1, 1);
    if (!(area.value > 0.0)) throw GeometryError("body has zero area");
    out.value = make_vec({mx.value / area.value, my.value / area.value});
    out.error = (area.error + mx.error + my.error) / area.value;
    return out;
  }
  if (options.samples < 1) throw InputError("Monte Carlo centroid needs samples >= 1");
  Vec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = -body.support(-Vec::Unit(n, i));
    hi[i] = body.support(Vec::Unit(n, i));
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec sum = Vec::Zero(n), sq = Vec::Zero(n);
  long hits = 0;
  Vec p(n);
  for (int k = 0; k < options.samples; ++k) {
    for (int i = 0; i < n; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * uni(rng);
    if (!body.contains(p)) continue;
    ++hits;
    sum += p;
    sq += p.cwiseProduct(p);
  }
  if (hits == 0) throw SamplingError("Monte Carlo centroid: no sample hit the body");
  out.value = sum / static_cast<double>(hits);
  const Vec var = (sq / static_cast<double>(hits) - out.value.cwiseProduct(out.value)).cwiseMax(0.0);
  out.error = std::sqrt(var.maxCoeff() / static_cast<double>(hits));
  return out;
}

NestedResult nested_check(const Body& inner, const Body& outer, double margin, int samples) {
  if (inner.dim() != outer.dim()) throw InputError("nested_check: bodies have different dimensions");
  if (margin < 0.0) margin = 1e-3 * outer.outer_radius();
  NestedResult out;
  out.slack = std::numeric_limits<double>::infinity();
  for (const Vec& u : probe_directions(inner.dim(), samples)) {
    const double s = outer.support(u) - inner.support(u);
    if (s < out.slack) {
      out.slack = s;
      out.worst_direction = u;
    }
  }
  out.nested = out.slack >= margin;
  return out;
}

}  // namespace tomo
