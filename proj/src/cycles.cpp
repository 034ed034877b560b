#include "tomoscope/cycles.hpp"

#include "tomoscope/errors.hpp"
#include "tomoscope/polynomial.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace tomo {

namespace {

constexpr double kOddTol = 1e-9;

json harmonic_terms_json(int n, const std::vector<HarmonicMode>& terms) {
  json out = json::array();
  for (const HarmonicMode& t : terms) {
    if (n == 2)
      out.push_back({{"m", t.m}, {"coef", t.coef}});
    else
      out.push_back({{"l", t.l}, {"m", t.m}, {"coef", t.coef}});
  }
  return out;
}

}  // namespace

CycleFunction::CycleFunction(int n, Fn fn, std::string description, json params)
    : dim_(n), fn_(std::move(fn)), description_(std::move(description)), params_(std::move(params)) {
  if (n < 2 || n > kMaxDim) throw InputError("cycle function dimension must be 2..4");
  const double defect = oddness_defect(*this);
  if (!(defect <= kOddTol))
    throw ContractError("cycle function '" + description_ + "' is not odd (defect " + std::to_string(defect) + ")");
}

CycleFunction CycleFunction::zero(int n) {
  return CycleFunction(n, [](const Vec&) { return 0.0; }, "zero", {{"kind", "zero"}});
}

CycleFunction CycleFunction::linear(const Vec& a) {
  std::ostringstream os;
  os.precision(6);
  os << "linear:(";
  for (int i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
  os << ")";
  return CycleFunction(static_cast<int>(a.size()), [a](const Vec& y) { return a.dot(y); }, os.str(),
                       {{"kind", "linear"}, {"a", vec_json(a)}});
}

CycleFunction CycleFunction::odd_harmonic_sum(int n, std::vector<HarmonicMode> terms) {
  if (n != 2 && n != 3) throw InputError("odd harmonic sums are available in dimensions 2 and 3");
  if (terms.empty()) throw InputError("odd harmonic sum needs at least one term");
  std::vector<std::pair<Polynomial, double>> polys;
  std::ostringstream os;
  os << "odd-harmonic:";
  for (const HarmonicMode& t : terms) {
    polys.emplace_back(n == 2 ? planar_harmonic(t.m) : solid_harmonic(t.l, t.m), t.coef);
    os << "(" << (n == 2 ? std::abs(t.m) : t.l) << "," << t.m << "," << t.coef << ")";
  }
  auto fn = [polys](const Vec& y) {
    double s = 0.0;
    for (const auto& [p, c] : polys) s += c * p.eval(y);
    return s;
  };
  return CycleFunction(n, fn, os.str(), {{"kind", "odd-harmonic-sum"}, {"terms", harmonic_terms_json(n, terms)}});
}

CycleFunction CycleFunction::custom(int n, Fn fn, std::string tag) {
  return CycleFunction(n, std::move(fn), tag, {{"kind", "custom"}, {"tag", tag}});
}

CycleFunction CycleFunction::rotated(const Mat& q) const {
  if (q.rows() != dim_ || q.cols() != dim_) throw InputError("rotation has the wrong size");
  Fn inner = fn_;
  return CycleFunction(dim_, [inner, q](const Vec& y) { return inner(q.transpose() * y); },
                       "rotated " + description_, {{"kind", "rotated"}, {"rotation", mat_json(q)}, {"of", params_}});
}

double oddness_defect(const CycleFunction& f, int pairs) {
  double worst = 0.0;
  for (const Vec& y : sample_sphere(f.dim(), pairs, {SphereStrategy::low_discrepancy, 0}))
    worst = std::max(worst, std::abs(f(y) + f(-y)));
  return worst;
}

CyclePlane cycle_plane(const CycleFunction& f, const Vec& y) {
  if (y.size() != f.dim()) throw InputError("cycle plane normal has the wrong dimension");
  if (std::abs(y.norm() - 1.0) > 1e-9) throw InputError("cycle plane normal must be a unit vector");
  CyclePlane out;
  out.y = y;
  out.plane.normal = y;
  out.plane.offset = f(y);
  return out;
}

json CycleCheck::to_json() const {
  json out = {{"is_cycle", is_cycle}, {"tested", tested}, {"skipped", skipped}, {"worst_depth", worst_depth}};
  if (witness) out["witness"] = {vec_json(witness->first), vec_json(witness->second)};
  return out;
}

namespace {

// max over the flat of min_u (h(u) - <z, u>) over sampled u, with the maximizer.
std::pair<double, Vec> flat_depth(const Body& K, const Vec& base, const Mat& dirs, const std::vector<Vec>& probes) {
  auto depth = [&](const Vec& z) {
    double d = std::numeric_limits<double>::infinity();
    for (const Vec& u : probes) d = std::min(d, K.support(u) - z.dot(u));
    return d;
  };
  const int k = static_cast<int>(dirs.cols());
  if (k == 0) return {depth(base), base};
  const double reach = 2.0 * (K.outer_radius() + (base - K.interior_point()).norm());
  if (k == 1) {
    const Minimum m = minimize_unimodal([&](double s) { return -depth(Vec(base + s * dirs.col(0))); }, -reach, reach, 80);
    return {-m.value, Vec(base + m.x * dirs.col(0))};
  }
  // Two directions: nested golden-section search (the inner maximum of a
  // concave function is concave in the outer variable).
  auto inner = [&](double s1) {
    const Vec b1 = base + s1 * dirs.col(0);
    return minimize_unimodal([&](double s2) { return -depth(Vec(b1 + s2 * dirs.col(1))); }, -reach, reach, 60);
  };
  const Minimum outer = minimize_unimodal([&](double s1) { return inner(s1).value; }, -reach, reach, 60);
  const Minimum in = inner(outer.x);
  return {-in.value, Vec(base + outer.x * dirs.col(0) + in.x * dirs.col(1))};
}

}  // namespace

CycleCheck is_cycle_for(const CycleFunction& f, const Body& K, int pairs, std::uint64_t seed) {
  const int n = f.dim();
  if (K.dim() != n) throw InputError("cycle function and body have different dimensions");
  if (pairs < 1) throw InputError("is_cycle_for needs a positive pair count");
  const std::vector<Vec> normals = sample_sphere(n, 2 * pairs, {SphereStrategy::uniform_random, seed});
  const std::vector<Vec> probes = probe_directions(n, n == 2 ? 128 : 192);
  const Vec c = K.interior_point();
  const double scale = std::max(1.0, K.outer_radius());
  CycleCheck out;
  for (int i = 0; i < pairs; ++i) {
    const Vec& p = normals[2 * i];
    const Vec& q = normals[2 * i + 1];
    if (std::abs(p.dot(q)) > 1.0 - 1e-9) {
      ++out.skipped;
      continue;
    }
    ++out.tested;
    Eigen::Matrix<double, 2, Eigen::Dynamic, 0, 2, kMaxDim> a(2, n);
    a.row(0) = p.transpose();
    a.row(1) = q.transpose();
    const Eigen::Vector2d rhs(f(p), f(q));
    const Vec base0 = a.transpose() * (a * a.transpose()).ldlt().solve(rhs);
    const std::vector<Vec> span = {p, q};
    const Mat dirs = n > 2 ? complement_basis(span, n) : Mat(n, 0);
    const Vec base = base0 + dirs * (dirs.transpose() * (c - base0));
    const auto [d, z] = flat_depth(K, base, dirs, probes);
    out.worst_depth = std::min(out.worst_depth, d);
    if (!(d > 1e-12 * scale) || !K.contains(z)) {
      out.is_cycle = false;
      out.witness = std::make_pair(p, q);
      return out;
    }
  }
  return out;
}

LemmaSolution lemma1_find(const CycleFunction& f, const Body& K, const FlatSpec& ell, double tol) {
  const int n = f.dim();
  if (K.dim() != n || ell.ambient_dim() != n) throw InputError("lemma1_find inputs have different dimensions");
  if (ell.dim() != n - 2)
    throw UnsupportedError("only flats of codimension 2 are supported (got dimension " + std::to_string(ell.dim()) +
                           " in R^" + std::to_string(n) + ")");
  const Mat e = complement_basis(ell.directions, n);
  const Vec o = ell.basepoint;
  auto normal = [&](double t) { return Vec(std::cos(t) * e.col(0) + std::sin(t) * e.col(1)); };
  auto sigma = [&](double t) {
    const Vec v = normal(t);
    return o.dot(v) - f(v);
  };
  if (!(tol > 0.0)) throw InputError("lemma1_find tolerance must be positive");
  const double t = find_odd_zero(sigma, std::max(1e-14, 1e-3 * tol));
  LemmaSolution out;
  out.t = t;
  out.plane = cycle_plane(f, unit(normal(t)));
  out.residual = std::abs(out.plane.plane.signed_distance(o));
  for (const Vec& d : ell.directions) {
    out.residual = std::max(out.residual, std::abs(out.plane.plane.signed_distance(o + d)));
    out.residual = std::max(out.residual, std::abs(out.plane.plane.signed_distance(o - d)));
  }
  if (!(out.residual <= tol))
    throw SolverError("cycle plane misses the flat by " + std::to_string(out.residual));
  return out;
}

}  // namespace tomo
