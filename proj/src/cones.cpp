#include "tomoscope/cones.hpp"

#include "tomoscope/errors.hpp"
#include "tomoscope/parallel.hpp"

#include <cmath>
#include <sstream>

namespace tomo {

namespace {

constexpr double kResidualTol = 1e-6;
constexpr double kFailureShare = 0.05;

// Unit directions orthogonal to u: the two in-plane ones in 2-D, `count`
// sphere samples of u^perp otherwise.
std::vector<Vec> orthogonal_directions(const Vec& u, int count) {
  const Mat b = complete_basis(u);
  std::vector<Vec> out;
  if (u.size() == 2) {
    out.push_back(b.col(0));
    out.push_back(-b.col(0));
    return out;
  }
  for (const Vec& w : sample_sphere(static_cast<int>(u.size()) - 1, count, {})) out.push_back(b * w);
  return out;
}

PlaneFit line_through(const Vec& p, const Vec& q) {
  const Vec d = q - p;
  if (d.norm() <= 1e-14 * std::max(1.0, p.norm())) throw DegenerateFitError("graze points coincide");
  Vec normal = unit(perp(d));
  double offset = normal.dot(p);
  if (offset < 0.0) {
    normal = -normal;
    offset = -offset;
  }
  PlaneFit fit;
  fit.plane = Hyperplane(normal, offset);
  fit.centroid = (p + q) / 2.0;
  return fit;
}

void attach_fits(GrazeSample& g) {
  const int n = static_cast<int>(g.apex.size());
  if (n == 2) {
    if (g.points.size() != 2) throw GeometryError("planar graze needs both tangency points");
    g.plane_fit = line_through(g.points[0], g.points[1]);
    return;
  }
  g.plane_fit = fit_plane(g.points);
  if (n == 3 && g.points.size() >= 6) {
    const Chart chart = hyperplane_chart(g.plane_fit.plane);
    std::vector<Point2> local;
    local.reserve(g.points.size());
    for (const Vec& p : g.points) {
      const Vec l = chart.to_local(p);
      local.emplace_back(l[0], l[1]);
    }
    g.conic_fit = fit_conic(local);
  }
}

struct Hit {
  bool ok = false;
  Vec point, normal;
  double residual = 0.0;
};

void collect(GrazeSample& g, const std::vector<Hit>& hits, const char* what) {
  for (const Hit& h : hits) {
    if (!h.ok) {
      ++g.failures;
      continue;
    }
    g.points.push_back(h.point);
    g.normals.push_back(h.normal);
    g.residuals.push_back(h.residual);
  }
  if (g.failures > kFailureShare * static_cast<double>(hits.size()))
    throw GeometryError(std::string(what) + ": " + std::to_string(g.failures) + " of " +
                        std::to_string(hits.size()) + " samples failed");
  attach_fits(g);
}

// Recovered normal at p; for bodies with corners the crossing normal is kept
// when it is a better witness than the local refinement.
Vec recover_normal(const Body& body, const Vec& p, const Vec& u, const std::function<double(const Vec&)>& residual) {
  const Vec nu = body.normal_at(p, u);
  if (body.strictly_convex()) return nu;
  return residual(u) < residual(nu) ? u : nu;
}

}  // namespace

Vec separating_normal(const Body& L, const Vec& apex) {
  const Vec z = L.interior_point();
  auto g = [&](const Vec& u) { return L.support(u) - apex.dot(u); };
  const double scale = std::max(1.0, (apex - z).norm());
  if ((apex - z).norm() <= 1e-14 * scale) throw ApexError("apex coincides with the body's interior point");
  Vec best = unit(Vec(apex - z));
  double best_g = g(best);
  // Nearest-point iteration: u <- direction from the support point to the apex.
  Vec u = best;
  for (int i = 0; i < 60; ++i) {
    const Vec d = apex - L.support_point(u);
    if (d.norm() <= 1e-15 * scale) break;
    u = unit(d);
    const double gu = g(u);
    if (gu < best_g - 1e-15 * scale) {
      best = u;
      best_g = gu;
    } else if (best_g < 0.0) {
      break;
    }
  }
  if (best_g < -1e-12 * scale) return best;
  for (const Vec& v : sample_sphere(L.dim(), 4096, {})) {
    const double gv = g(v);
    if (gv < best_g) {
      best = v;
      best_g = gv;
    }
  }
  if (!(best_g < -1e-12 * scale)) throw ApexError("no hyperplane separates the apex from the body");
  return best;
}

GrazeSample graze(const Body& L, const Vec& apex, int count) {
  const int n = L.dim();
  if (apex.size() != n) throw InputError("graze apex has the wrong dimension");
  if (count < 1) throw InputError("graze needs a positive sample count");
  if (L.contains(apex)) throw ApexError("graze apex lies in the body");
  const Vec u0 = separating_normal(L, apex);
  const std::vector<Vec> dirs = orthogonal_directions(u0, count);
  const double scale = std::max(1.0, apex.norm());
  std::vector<Hit> hits(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    const Vec& w = dirs[i];
    auto arc = [&](double t) { return Vec(std::cos(t) * u0 + std::sin(t) * w); };
    auto f = [&](double t) {
      const Vec u = arc(t);
      return L.support(u) - apex.dot(u);
    };
    double t = 0.0;
    try {
      t = find_root(f, 0.0, kPi, 1e-15).t;
    } catch (const BracketError&) {
      return;
    }
    const Vec u = unit(arc(t));
    Hit h;
    h.point = L.support_point(u);
    auto residual = [&](const Vec& nu) { return std::abs(nu.dot(apex - h.point)); };
    h.normal = recover_normal(L, h.point, u, residual);
    h.residual = residual(h.normal);
    h.ok = std::isfinite(h.residual) && h.residual <= kResidualTol * scale;
    hits[i] = std::move(h);
  });
  GrazeSample g;
  g.apex = apex;
  collect(g, hits, "graze");
  return g;
}

GrazeSample shadow_boundary(const Body& K, const Vec& u, int count) {
  const int n = K.dim();
  if (u.size() != n) throw InputError("shadow direction has the wrong dimension");
  if (count < 1) throw InputError("shadow boundary needs a positive sample count");
  const Vec dir = unit(u);
  const std::vector<Vec> dirs = orthogonal_directions(dir, count);
  std::vector<Hit> hits(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    Hit h;
    h.point = K.support_point(dirs[i]);
    auto residual = [&](const Vec& nu) { return std::abs(nu.dot(dir)); };
    h.normal = recover_normal(K, h.point, dirs[i], residual);
    h.residual = residual(h.normal);
    h.ok = std::isfinite(h.residual) && h.residual <= kResidualTol;
    hits[i] = std::move(h);
  });
  GrazeSample g;
  g.is_direction = true;
  g.apex = dir;
  collect(g, hits, "shadow boundary");
  return g;
}

json GrazeSample::to_json() const {
  json pts = json::array(), res = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    pts.push_back(vec_json(points[i]));
    res.push_back(residuals[i]);
  }
  json out = {{"kind", is_direction ? "shadow-boundary" : "graze"},
              {is_direction ? "direction" : "apex", vec_json(apex)},
              {"points", pts},
              {"residuals", res},
              {"failures", failures},
              {"plane",
               {{"normal", vec_json(plane_fit.plane.normal)},
                {"offset", plane_fit.plane.offset},
                {"residual", plane_fit.residual},
                {"thickness_ratio", plane_fit.thickness_ratio}}}};
  if (conic_fit) {
    out["conic"] = {{"coefficients", conic_fit->coefficients},
                    {"class", to_string(conic_fit->kind)},
                    {"residual", conic_fit->residual}};
  }
  return out;
}

std::string GrazeSample::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index";
  for (int k = 0; k < apex.size(); ++k) os << ",p" << k;
  os << ",residual\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << i;
    for (int k = 0; k < points[i].size(); ++k) os << ',' << points[i][k];
    os << ',' << residuals[i] << '\n';
  }
  return os.str();
}

Section slice2(const BodyPtr& K, const FlatSpec& plane2) {
  const int n = K->dim();
  if (plane2.dim() != 2 || plane2.ambient_dim() != n) throw InputError("slice2 needs a 2-flat in the body's space");
  Section cur{K, Chart{Vec::Zero(n), Mat::Identity(n, n)}};
  while (cur.body->dim() > 2) {
    const int m = cur.body->dim();
    const Vec base = cur.chart.to_local(plane2.basepoint);
    std::vector<Vec> dirs;
    for (const Vec& d : plane2.directions) dirs.push_back(cur.chart.dir_to_local(d));
    const Vec nu = complement_basis(dirs, m).col(0);
    const Section next = section(cur.body, Hyperplane(nu, nu.dot(base)));
    cur = Section{next.body, Chart{cur.chart.to_world(next.chart.origin), cur.chart.basis * next.chart.basis}};
  }
  return cur;
}

namespace {

// Touch point of the planar support line from `apex` on the positive side of
// `e` relative to the line through `anchor` along the apex direction.
Vec side_touch(const Body& slice, const Vec& apex, const Vec& anchor, const Vec& e) {
  const GrazeSample g = graze(slice, apex, 2);
  std::optional<Vec> pick;
  for (const Vec& p : g.points) {
    if ((p - anchor).dot(e) > 0.0) {
      if (pick) throw GeometryError("both support lines touch on the same side");
      pick = p;
    }
  }
  if (!pick) throw GeometryError("no support line touches on the chosen side");
  return *pick;
}

Vec intersect_lines(const Vec& p1, const Vec& d1, const Vec& p2, const Vec& d2) {
  Eigen::Matrix2d m;
  m << d1[0], -d2[0], d1[1], -d2[1];
  if (std::abs(m.determinant()) <= 1e-14 * d1.norm() * d2.norm()) throw GeometryError("support lines are parallel");
  const Eigen::Vector2d st = m.partialPivLu().solve(Eigen::Vector2d(p2[0] - p1[0], p2[1] - p1[1]));
  return p1 + st[0] * d1;
}

void require_in_unit_ball(const Body& K) {
  const int n = K.dim();
  const NestedResult r = nested_check(K, Ball(Vec::Zero(n), 1.0));
  if (!r.nested)
    throw ContainmentError("body is not inside the open unit ball (slack " + std::to_string(r.slack) + ")");
}

}  // namespace

AntipodalProbe antipodal_probe(const BodyPtr& K, const Vec& x, const FlatSpec& plane2) {
  const int n = K->dim();
  if (x.size() != n) throw InputError("probe apex has the wrong dimension");
  if (std::abs(x.norm() - 1.0) > 1e-9) throw InputError("probe apex must be a unit vector");
  if (plane2.distance(x) > 1e-9 || plane2.distance(-x) > 1e-9)
    throw InputError("probe plane must contain x and -x");
  require_in_unit_ball(*K);
  const Section s = slice2(K, plane2);
  const Vec xp = s.chart.to_local(x), xm = s.chart.to_local(-x);
  const Vec mid = (xp + xm) / 2.0;
  const Vec e = perp(unit(Vec(xp - xm)));
  const Vec ta = side_touch(*s.body, xp, mid, e);
  const Vec tb = side_touch(*s.body, xm, mid, e);
  const Vec ql = intersect_lines(xp, ta - xp, xm, tb - xm);
  AntipodalProbe out;
  out.x = x;
  out.plane2 = plane2;
  out.q = s.chart.to_world(ql);
  out.deviation = std::abs(out.q.dot(x));
  out.touch_plus = s.chart.to_world(ta);
  out.touch_minus = s.chart.to_world(tb);
  return out;
}

ConeSegment cone_section_segment(const BodyPtr& K, const Vec& x) {
  if (K->dim() != 2 || x.size() != 2) throw InputError("cone_section_segment is planar");
  if (std::abs(x.norm() - 1.0) > 1e-9) throw InputError("segment apex must be a unit vector");
  require_in_unit_ball(*K);
  const CentralProjection cp = central_project(K, x, Hyperplane(x, 0.0), 2);
  const Vec e = perp(x);
  Vec pa = cp.chart.to_world(cp.a), pb = cp.chart.to_world(cp.b);
  if (pa.dot(e) > pb.dot(e)) std::swap(pa, pb);
  ConeSegment out;
  out.a = pa;
  out.b = pb;
  out.length = (pb - pa).norm();
  out.alpha = std::atan(pb.dot(e));
  out.theta = std::atan(-pa.dot(e));
  return out;
}

}  // namespace tomo
