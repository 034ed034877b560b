#include "tomoscope/floating.hpp"

#include "tomoscope/errors.hpp"
#include "tomoscope/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tomo {

namespace {

double unit_ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

}  // namespace

CapProfile::CapProfile(const Body& body, const Vec& u, const VolumeOptions& options)
    : body_(&body), u_(unit(u)) {
  const int n = body.dim();
  if (u.size() != n) throw InputError("cap direction has the wrong dimension");
  lo_ = -body.support(-u_);
  hi_ = body.support(u_);
  if (n == 2) return;
  if (options.samples < 1) throw InputError("Monte Carlo cap volume needs samples >= 1");
  monte_carlo_ = true;
  samples_ = options.samples;
  const Mat b = complete_basis(u_);
  Vec lo(n), width(n);
  lo[0] = lo_;
  width[0] = hi_ - lo_;
  for (int i = 1; i < n; ++i) {
    const Vec bi = b.col(i - 1);
    lo[i] = -body.support(-bi);
    width[i] = body.support(bi) - lo[i];
  }
  box_volume_ = width.prod();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec a(n);
  for (int k = 0; k < samples_; ++k) {
    for (int i = 0; i < n; ++i) a[i] = lo[i] + width[i] * uni(rng);
    const Vec y = a[0] * u_ + b * a.tail(n - 1);
    if (body.contains(y)) hits_.push_back(a[0]);
  }
  std::sort(hits_.begin(), hits_.end());
}

Integral CapProfile::volume(double t) const {
  Integral out;
  if (t >= hi_) return out;
  if (!monte_carlo_) return chord_integral(*body_, u_, std::max(t, lo_), hi_, 0);
  const auto above = hits_.end() - std::lower_bound(hits_.begin(), hits_.end(), t);
  const double p = static_cast<double>(above) / samples_;
  out.value = box_volume_ * p;
  out.error = box_volume_ * std::sqrt(p * (1.0 - p) / samples_);
  return out;
}

Integral cap_volume(const Body& K, const Vec& u, double t, const VolumeOptions& options) {
  if (t >= K.support(unit(u))) return {};
  return CapProfile(K, u, options).volume(t);
}

Integral body_volume(const Body& K, const VolumeOptions& options) {
  const int n = K.dim();
  if (n == 2) {
    const Vec e = make_vec({1, 0});
    return chord_integral(K, e, -K.support(-e), K.support(e), 0);
  }
  if (const auto* b = dynamic_cast<const Ball*>(&K)) return {unit_ball_volume(n) * std::pow(b->radius(), n), 0.0};
  if (const auto* e = dynamic_cast<const Ellipsoid*>(&K)) return {e->volume(), 0.0};
  if (const auto* p = dynamic_cast<const PolytopeV*>(&K); p && n == 3) return {p->volume(), 0.0};
  return CapProfile(K, Vec::Unit(n, 0), options).volume(-std::numeric_limits<double>::infinity());
}

FloatingSpec::FloatingSpec(BodyPtr b, double d, VolumeOptions o) : body(std::move(b)), delta(d), options(o) {
  if (!body) throw InputError("floating spec needs a body");
  volume = body_volume(*body, options);
  if (!(delta > 0.0) || !std::isfinite(delta)) throw SpecError("floating delta must be positive");
  if (!(delta < 0.5 * volume.value))
    throw SpecError("floating delta " + std::to_string(delta) + " is not below half the volume " +
                    std::to_string(volume.value));
}

CapCut cap_cut(const FloatingSpec& spec, const Vec& u) {
  const CapProfile profile(*spec.body, u, spec.options);
  auto f = [&](double t) { return profile.volume(t).value - spec.delta; };
  double t = 0.0;
  try {
    t = find_root(f, profile.lo(), profile.hi(), 1e-13).t;
  } catch (const BracketError&) {
    throw SpecError("no cap of the requested volume in this direction");
  }
  const Integral v = profile.volume(t);
  return {unit(u), t, v.value, v.error};
}

std::vector<CapCut> cap_cuts(const FloatingSpec& spec, std::span<const Vec> directions) {
  std::vector<CapCut> cuts(directions.size());
  parallel_for(directions.size(), [&](std::size_t i) { cuts[i] = cap_cut(spec, directions[i]); });
  return cuts;
}

Membership floating_contains(std::span<const CapCut> cuts, const Vec& p) {
  Membership m;
  m.margin = std::numeric_limits<double>::infinity();
  for (const CapCut& c : cuts) m.margin = std::min(m.margin, c.offset - p.dot(c.direction));
  m.inside = m.margin >= 0.0;
  return m;
}

Membership floating_contains(const FloatingSpec& spec, const Vec& p, std::span<const Vec> directions) {
  return floating_contains(cap_cuts(spec, directions), p);
}

PolytopeV floating_polygon(std::span<const CapCut> cuts) {
  if (cuts.size() < 3 || cuts.front().direction.size() != 2) throw InputError("floating_polygon needs >= 3 planar cuts");
  std::vector<Vec> verts;
  for (std::size_t i = 0; i < cuts.size(); ++i)
    for (std::size_t j = i + 1; j < cuts.size(); ++j) {
      Eigen::Matrix2d m;
      m << cuts[i].direction[0], cuts[i].direction[1], cuts[j].direction[0], cuts[j].direction[1];
      if (std::abs(m.determinant()) < 1e-12) continue;
      const Eigen::Vector2d v = m.partialPivLu().solve(Eigen::Vector2d(cuts[i].offset, cuts[j].offset));
      const Vec p = make_vec({v[0], v[1]});
      if (floating_contains(cuts, p).margin >= -1e-12) verts.push_back(p);
    }
  return PolytopeV(verts);
}

json FloatingPairReport::to_json() const {
  json per = json::array();
  for (std::size_t i = 0; i < directions.size(); ++i)
    per.push_back({{"u", vec_json(directions[i])}, {"t", offsets[i]}, {"volume", volumes[i]}, {"error", errors[i]}});
  return {{"delta_hat", delta_hat}, {"spread", spread}, {"bound", bound}, {"pass", pass}, {"per_direction", per}};
}

FloatingPairReport is_floating_pair(const Body& K, const Body& L, std::span<const Vec> directions,
                                    const FloatingPairOptions& options) {
  if (K.dim() != L.dim()) throw InputError("floating pair bodies have different dimensions");
  if (directions.empty()) throw InputError("floating pair needs directions");
  const NestedResult nest = nested_check(L, K);
  if (!nest.nested)
    throw NestingError("inner body is not inside the outer body (slack " + std::to_string(nest.slack) + ")");
  FloatingPairReport r;
  const std::size_t m = directions.size();
  r.directions.assign(directions.begin(), directions.end());
  r.offsets.resize(m);
  r.volumes.resize(m);
  r.errors.resize(m);
  parallel_for(m, [&](std::size_t i) {
    const Vec u = unit(directions[i]);
    r.directions[i] = u;
    r.offsets[i] = L.support(u);
    const Integral v = CapProfile(K, u, options.volume).volume(r.offsets[i]);
    r.volumes[i] = v.value;
    r.errors[i] = v.error;
  });
  const auto [mn, mx] = std::minmax_element(r.volumes.begin(), r.volumes.end());
  double sum = 0.0;
  for (double v : r.volumes) sum += v;
  r.delta_hat = sum / static_cast<double>(m);
  r.spread = *mx - *mn;
  r.bound = options.tolerance * r.delta_hat;
  if (K.dim() >= 3) r.bound = std::max(r.bound, 3.0 * *std::max_element(r.errors.begin(), r.errors.end()));
  r.pass = r.spread <= r.bound;
  return r;
}

namespace {

// Length of the part of cut line j that satisfies every other cut; negative
// when line j misses the sampled floating body.
double touching_length(std::span<const CapCut> cuts, const CapCut& line) {
  const Vec e = perp(line.direction);
  const Vec p0 = line.offset * line.direction;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const CapCut& c : cuts) {
    const double a = e.dot(c.direction), b = c.offset - p0.dot(c.direction);
    if (std::abs(a) < 1e-12) {
      if (b < -1e-12) return -std::numeric_limits<double>::infinity();
      continue;
    }
    if (a > 0)
      hi = std::min(hi, b / a);
    else
      lo = std::max(lo, b / a);
  }
  return hi - lo;
}

}  // namespace

MidpointCheck tangent_chord_midpoint_check(const FloatingSpec& spec, int count) {
  if (spec.body->dim() != 2) throw InputError("chord midpoint check is planar");
  if (count < 3) throw InputError("chord midpoint check needs at least 3 directions");
  const std::vector<Vec> dirs = sample_sphere(2, count, {});
  MidpointCheck out;
  out.cuts = cap_cuts(spec, dirs);
  out.midpoints.resize(dirs.size());
  out.deviations.resize(dirs.size());
  out.tangent.resize(dirs.size());
  const double scale = std::max(1.0, spec.body->outer_radius());
  const double spacing = 2.0 * kPi / count;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const CapCut& cut = out.cuts[j];
    const auto c = chord(*spec.body, cut.direction, cut.offset);
    if (!c) throw GeometryError("cap cut misses the body");
    out.midpoints[j] = (c->a + c->b) / 2.0;
    out.deviations[j] = std::max(0.0, -floating_contains(out.cuts, out.midpoints[j]).margin);
    out.tangent[j] = true;
    if (out.deviations[j] > 1e-12 * scale) {
      // A cut line can look tangent only because the directions that cut it
      // off fall between samples: refine around it before deciding.
      std::vector<Vec> fan;
      const double base = std::atan2(cut.direction[1], cut.direction[0]);
      for (int k = -64; k <= 64; ++k) {
        const double a = base + spacing * k / 16.0;
        fan.push_back(make_vec({std::cos(a), std::sin(a)}));
      }
      std::vector<CapCut> all = cap_cuts(spec, fan);
      all.insert(all.end(), out.cuts.begin(), out.cuts.end());
      out.tangent[j] = touching_length(all, cut) >= -1e-12 * scale;
    }
    if (!out.tangent[j]) {
      ++out.non_tangent;
      continue;
    }
    out.max_deviation = std::max(out.max_deviation, out.deviations[j]);
  }
  return out;
}

CentroidCheck tangent_section_centroid_check(const BodyPtr& K, const Body& L, int count) {
  if (K->dim() != 3 || L.dim() != 3) throw InputError("tangent section centroid check needs 3-D bodies");
  if (count < 1) throw InputError("tangent section centroid check needs a positive count");
  const NestedResult nest = nested_check(L, *K);
  if (!nest.nested)
    throw NestingError("inner body is not inside the outer body (slack " + std::to_string(nest.slack) + ")");
  const std::vector<Vec> dirs = sample_sphere(3, count, {});
  CentroidCheck out;
  out.tangency_points.resize(dirs.size());
  out.deviations.resize(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    const Vec x = L.support_point(dirs[i]);
    const Section s = section(K, Hyperplane(dirs[i], x.dot(dirs[i])));
    out.tangency_points[i] = x;
    out.deviations[i] = (s.chart.to_world(centroid(*s.body).value) - x).norm();
  });
  out.max_deviation = *std::max_element(out.deviations.begin(), out.deviations.end());
  return out;
}

}  // namespace tomo
