#include "tomoscope/verify.hpp"

#include "tomoscope/cones.hpp"
#include "tomoscope/errors.hpp"
#include "tomoscope/floating.hpp"
#include "tomoscope/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tomo {

namespace {

constexpr int kAlignGrid = 720;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<Vec> sampled(int n, int count, const CheckOptions&) { return sample_sphere(n, count, {}); }

// Frame handling: the checker runs on the bodies seen through Q^T and the
// sample locations are mapped back by Q.
const Mat* frame_of(const CheckOptions& o, int n) {
  if (!o.frame) return nullptr;
  const Mat& q = *o.frame;
  if (q.rows() != n || q.cols() != n) throw InputError("sampling frame has the wrong size");
  if (!(q.transpose() * q - Mat::Identity(n, n)).isZero(1e-9)) throw InputError("sampling frame must be orthogonal");
  return &q;
}

BodyPtr pull(const BodyPtr& b, const Mat& q) { return affine_image(b, q.transpose(), Vec::Zero(q.rows())); }

CheckOptions unframed(const CheckOptions& o) {
  CheckOptions inner = o;
  inner.frame.reset();
  return inner;
}

VerificationReport push(VerificationReport r, const Mat& q, std::initializer_list<const Body*> bodies) {
  r.bodies = json::array();
  for (const Body* b : bodies) r.bodies.push_back(b->describe());
  for (SampleRecord& s : r.samples) s.at = q * s.at;
  r.details["frame"] = mat_json(q);
  return r;
}

VerificationReport start(std::string theorem, std::initializer_list<const Body*> bodies, const CheckOptions& o) {
  if (!(o.tolerance > 0.0)) throw InputError("tolerance must be positive");
  VerificationReport r;
  r.theorem = std::move(theorem);
  for (const Body* b : bodies) r.bodies.push_back(b->describe());
  r.tolerance = o.tolerance;
  r.seed = o.seed;
  return r;
}

void need_dim(const Body& K, int lo, int hi, const std::string& what) {
  if (K.dim() < lo || K.dim() > hi)
    throw InputError(what + " is not available in dimension " + std::to_string(K.dim()));
}

void need_same_dim(const Body& K, const Body& L) {
  if (K.dim() != L.dim()) throw InputError("bodies have different dimensions");
}

double diameter(const std::vector<Vec>& pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

// Support values on the 720-point chart grid, centered at their Steiner point.
std::vector<double> centered_support(const std::vector<double>& h) {
  const int m = static_cast<int>(h.size());
  double sx = 0.0, sy = 0.0;
  for (int k = 0; k < m; ++k) {
    const double a = 2 * kPi * k / m;
    sx += h[k] * std::cos(a);
    sy += h[k] * std::sin(a);
  }
  sx *= 2.0 / m;
  sy *= 2.0 / m;
  std::vector<double> out(m);
  for (int k = 0; k < m; ++k) {
    const double a = 2 * kPi * k / m;
    out[k] = h[k] - sx * std::cos(a) - sy * std::sin(a);
  }
  return out;
}

// min over grid rotations and a reflection of sup_k |a_k - b_{shift(k)}|.
double alignment_distance(const std::vector<double>& a, const std::vector<double>& b) {
  const int m = static_cast<int>(a.size());
  double best = std::numeric_limits<double>::infinity();
  for (int reflect = 0; reflect < 2; ++reflect)
    for (int r = 0; r < m; ++r) {
      double worst = 0.0;
      for (int k = 0; k < m && worst < best; ++k) {
        const int j = reflect ? ((m - k) % m + r) % m : (k + r) % m;
        worst = std::max(worst, std::abs(a[k] - b[j]));
      }
      best = std::min(best, worst);
    }
  return best;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// Area of a planar body from equispaced support values: (1/2) ∫ h^2 - h'^2.
double support_area(const std::vector<double>& h) {
  const int m = static_cast<int>(h.size());
  const double step = 2 * kPi / m;
  double s = 0.0;
  for (int k = 0; k < m; ++k) {
    const double d = (h[(k + 1) % m] - h[(k + m - 1) % m]) / (2 * step);
    s += h[k] * h[k] - d * d;
  }
  return 0.5 * s * step;
}

std::vector<double> image_support(const BodyPtr& K, const Vec& x, const Hyperplane& plane) {
  return central_project(K, x, plane, kAlignGrid).support;
}

Vec volume_centroid(const Body& K, const CheckOptions& o) {
  if (const auto* b = dynamic_cast<const Ball*>(&K)) return b->center();
  if (const auto* e = dynamic_cast<const Ellipsoid*>(&K)) return e->center();
  if (const auto* p = dynamic_cast<const PolytopeV*>(&K); p && K.dim() <= 3) return p->centroid();
  if (K.dim() == 2) return centroid(K).value;
  return centroid(K, {CentroidMethod::monte_carlo, o.seed, o.samples}).value;
}

}  // namespace

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

// --- reports -----------------------------------------------------------------------

void VerificationReport::finalize() {
  skipped = 0;
  max_violation = 0.0;
  int scored = 0;
  for (const SampleRecord& s : samples) {
    if (s.skipped) {
      ++skipped;
      continue;
    }
    ++scored;
    if (!(s.score <= max_violation)) max_violation = std::isnan(s.score) ? std::numeric_limits<double>::infinity() : s.score;
  }
  if (scored == 0) max_violation = std::numeric_limits<double>::infinity();
  pass = max_violation <= tolerance;
}

json VerificationReport::to_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleRecord& s = samples[i];
    json row = {{"index", i}, {"kind", s.kind}, {"at", vec_json(s.at)}, {"score", number_json(s.score)},
                {"skipped", s.skipped}};
    if (!s.note.empty()) row["note"] = s.note;
    rows.push_back(row);
  }
  return {{"theorem", theorem},
          {"bodies", bodies},
          {"samples", rows},
          {"max_violation", number_json(max_violation)},
          {"tolerance", number_json(tolerance)},
          {"verdict", verdict()},
          {"seed", seed},
          {"skipped", skipped},
          {"details", details}};
}

std::string VerificationReport::samples_csv() const {
  std::ostringstream os;
  os << "index,kind,c0,c1,c2,c3,score,skipped\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleRecord& s = samples[i];
    os << i << ',' << s.kind;
    for (int c = 0; c < kMaxDim; ++c) {
      os << ',';
      if (c < s.at.size()) os << format_double(s.at[c]);
    }
    os << ',' << format_double(s.score) << ',' << (s.skipped ? 1 : 0) << '\n';
  }
  return os.str();
}

// --- symmetry ------------------------------------------------------------------------

SymmetryScore symmetric_about(const Body& K, const Vec& q, int count) {
  const int n = K.dim();
  if (q.size() != n) throw InputError("symmetry center has the wrong dimension");
  if (count < 1) throw InputError("symmetric_about needs a positive count");
  double depth = std::numeric_limits<double>::infinity();
  for (const Vec& u : probe_directions(n, 128)) depth = std::min(depth, K.support(u) - q.dot(u));
  if (!K.contains(q) || !(depth > 1e-12 * std::max(1.0, K.outer_radius())))
    throw InputError("symmetry center must be an interior point of the body");
  SymmetryScore out;
  out.worst_direction = Vec::Unit(n, 0);
  for (const Vec& u : sample_sphere(n, count, {})) {
    const double a = std::abs(K.support(u) - K.support(-u) - 2.0 * q.dot(u));
    if (a > out.asymmetry) {
      out.asymmetry = a;
      out.worst_direction = u;
    }
  }
  std::vector<Vec> chords;
  if (n == 2) {
    for (int k = 0; k < 8; ++k) {
      const double a = (k + 0.5) * kPi / 8;
      chords.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
  } else {
    chords = sample_sphere(n, 8, {SphereStrategy::low_discrepancy, 0});
  }
  for (const Vec& d : chords) {
    const Vec p = K.ray_exit(q, d), m = K.ray_exit(q, -d);
    const Vec np = K.normal_at(p, d), nm = K.normal_at(m, -d);
    out.chord_audit = std::max(out.chord_audit, vector_angle(np, -nm));
  }
  return out;
}

// --- checkers --------------------------------------------------------------------------

VerificationReport check_thmO(const BodyPtr& K, const BodyPtr& L, int count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) return push(check_thmO(pull(K, *q), pull(L, *q), count, unframed(o)), *q, {K.get(), L.get()});
  need_same_dim(*K, *L);
  need_dim(*K, 3, kMaxDim, "tangent-section symmetry check");
  VerificationReport r = start("thmO", {K.get(), L.get()}, o);
  const std::vector<Vec> dirs = sampled(K->dim(), count, o);
  r.samples.resize(dirs.size());
  std::vector<double> audit(dirs.size(), 0.0);
  parallel_for(dirs.size(), [&](std::size_t i) {
    const Vec& u = dirs[i];
    const Vec x = L->support_point(u);
    SampleRecord& s = r.samples[i];
    s.kind = "normal";
    s.at = u;
    try {
      const Section sec = section(K, Hyperplane(u, x.dot(u)));
      const SymmetryScore sym = symmetric_about(*sec.body, sec.chart.to_local(x), 256);
      s.score = sym.asymmetry;
      audit[i] = sym.chord_audit;
    } catch (const EmptySectionError&) {
      s.skipped = true;
      s.note = "tangent plane misses int K";
    } catch (const InputError&) {
      s.skipped = true;
      s.note = "tangency point on the section boundary";
    }
  });
  r.details["hammer_audit"] = number_json(*std::max_element(audit.begin(), audit.end()));
  r.finalize();
  return r;
}

VerificationReport check_thm1(const BodyPtr& K, const BodyPtr& L, const Thm1Mode& mode, int count,
                              const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) {
    Thm1Mode m = mode;
    if (auto* sp = std::get_if<SphereSpec>(&m)) sp->center = q->transpose() * sp->center;
    else m = std::get<CycleFunction>(mode).rotated(q->transpose());
    return push(check_thm1(pull(K, *q), pull(L, *q), m, count, unframed(o)), *q, {K.get(), L.get()});
  }
  need_same_dim(*K, *L);
  need_dim(*K, 3, kMaxDim, "plane-section floating check");
  const int n = K->dim();
  VerificationReport r = start("thm1", {K.get(), L.get()}, o);
  const std::vector<Vec> normals = sampled(n, count, o);
  std::vector<Hyperplane> planes;
  if (const auto* sphere = std::get_if<SphereSpec>(&mode)) {
    if (sphere->center.size() != n || !(sphere->radius > 0.0)) throw InputError("invalid sphere for the plane family");
    if (!nested_check(Ball(sphere->center, sphere->radius), *L).nested)
      throw InputError("the sphere of tangent planes must lie in int L");
    r.details["mode"] = {{"kind", "sphere"}, {"center", vec_json(sphere->center)}, {"radius", sphere->radius}};
    for (const Vec& u : normals) planes.emplace_back(u, sphere->center.dot(u) + sphere->radius);
  } else {
    const CycleFunction& f = std::get<CycleFunction>(mode);
    if (f.dim() != n) throw InputError("cycle function and bodies have different dimensions");
    r.details["mode"] = {{"kind", "cycle"}, {"function", f.describe()}};
    for (const Vec& u : normals) planes.push_back(cycle_plane(f, u).plane);
    // Smoke-test the containing-plane solver on flats through L.
    int failures = 0;
    double worst = 0.0;
    const Vec c = L->interior_point();
    for (int k = 0; k < 4; ++k) {
      const Mat q = random_orthogonal(n, o.seed + 17 + k);
      std::vector<Vec> dirs;
      for (int j = 0; j < n - 2; ++j) dirs.push_back(q.col(j));
      try {
        worst = std::max(worst, lemma1_find(f, *L, FlatSpec(c, dirs), 1e-8).residual);
      } catch (const Error&) {
        ++failures;
      }
    }
    r.details["lemma_smoke"] = {{"runs", 4}, {"failures", failures}, {"max_residual", number_json(worst)}};
  }
  const std::vector<Vec> in_plane = sample_sphere(n - 1, o.directions, {});
  FloatingPairOptions fo;
  fo.tolerance = o.tolerance;
  fo.volume = {o.seed, o.samples};
  double mc_bound = 0.0;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const Hyperplane& h = planes[i];
    SampleRecord s;
    s.kind = "normal";
    s.at = h.normal;
    if (!(L->support(h.normal) - h.offset > 1e-12) || !(h.offset + L->support(-h.normal) > 1e-12)) {
      s.skipped = true;
      s.note = "plane misses int L";
      r.samples.push_back(s);
      continue;
    }
    const Section sk = section(K, h), sl = section(L, h);
    const FloatingPairReport fp = is_floating_pair(*sk.body, *sl.body, in_plane, fo);
    s.score = fp.spread / fp.delta_hat;
    if (n - 1 >= 3) mc_bound = std::max(mc_bound, 3.0 * *std::max_element(fp.errors.begin(), fp.errors.end()) / fp.delta_hat);
    r.samples.push_back(s);
  }
  r.details["monte_carlo_bound"] = mc_bound;
  r.details["closed_form_tolerance"] = o.tolerance;
  r.tolerance = std::max(o.tolerance, mc_bound);
  r.finalize();
  return r;
}

VerificationReport check_conj2(const BodyPtr& K, const BodyPtr& L, int count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) return push(check_conj2(pull(K, *q), pull(L, *q), count, unframed(o)), *q, {K.get(), L.get()});
  need_same_dim(*K, *L);
  need_dim(*K, 3, kMaxDim, "shadow floating check");
  const int n = K->dim();
  VerificationReport r = start("conj2", {K.get(), L.get()}, o);
  const std::vector<Vec> in_plane = sample_sphere(n - 1, o.directions, {});
  FloatingPairOptions fo;
  fo.tolerance = o.tolerance;
  fo.volume = {o.seed, o.samples};
  double mc_bound = 0.0;
  for (const Vec& u : sampled(n, count, o)) {
    const Projection pk = orth_project(K, u), pl = orth_project(L, u);
    const FloatingPairReport fp = is_floating_pair(*pk.body, *pl.body, in_plane, fo);
    SampleRecord s;
    s.kind = "direction";
    s.at = u;
    s.score = fp.spread / fp.delta_hat;
    if (n - 1 >= 3) mc_bound = std::max(mc_bound, 3.0 * *std::max_element(fp.errors.begin(), fp.errors.end()) / fp.delta_hat);
    r.samples.push_back(s);
  }
  r.details["monte_carlo_bound"] = mc_bound;
  r.details["closed_form_tolerance"] = o.tolerance;
  r.tolerance = std::max(o.tolerance, mc_bound);
  r.finalize();
  return r;
}

VerificationReport check_conj3(const BodyPtr& K, const Vec& q, int count, const CheckOptions& o) {
  if (const Mat* f = frame_of(o, K->dim())) {
    VerificationReport r = push(check_conj3(pull(K, *f), f->transpose() * q, count, unframed(o)), *f, {K.get()});
    r.details["q"] = vec_json(q);
    return r;
  }
  need_dim(*K, 3, kMaxDim, "shadow centroid check");
  const int n = K->dim();
  VerificationReport r = start("conj3", {K.get()}, o);
  const SymmetryScore sym = symmetric_about(*K, q, 256);
  r.details["q"] = vec_json(q);
  r.details["asymmetry_about_q"] = sym.asymmetry;
  const std::vector<Vec> dirs = sampled(n, count, o);
  r.samples.resize(dirs.size());
  std::vector<double> bound(dirs.size(), 0.0);
  parallel_for(dirs.size(), [&](std::size_t i) {
    const Projection p = orth_project(K, dirs[i]);
    CentroidOptions co;
    if (n - 1 >= 3) co = {CentroidMethod::monte_carlo, o.seed, o.samples};
    const CentroidResult c = centroid(*p.body, co);
    r.samples[i].kind = "direction";
    r.samples[i].at = dirs[i];
    r.samples[i].score = (c.value - p.chart.to_local(q)).norm();
    if (n - 1 >= 3) bound[i] = 3.0 * c.error;
  });
  const double mc_bound = *std::max_element(bound.begin(), bound.end());
  r.details["monte_carlo_bound"] = mc_bound;
  r.details["closed_form_tolerance"] = o.tolerance;
  r.tolerance = std::max(o.tolerance, mc_bound);
  r.finalize();
  return r;
}

VerificationReport check_thm2(const BodyPtr& K, int apex_count, int plane_count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) return push(check_thm2(pull(K, *q), apex_count, plane_count, unframed(o)), *q, {K.get()});
  const int n = K->dim();
  if (plane_count < 1) throw InputError("check_thm2 needs a positive plane count");
  VerificationReport r = start("thm2", {K.get()}, o);
  struct Item {
    Vec x;
    FlatSpec plane;
  };
  std::vector<Item> items;
  for (const Vec& x : sampled(n, apex_count, o)) {
    if (n == 2) {
      items.push_back({x, FlatSpec(Vec::Zero(2), {make_vec({1, 0}), make_vec({0, 1})})});
      continue;
    }
    const Mat b = complete_basis(x);
    for (int j = 0; j < plane_count; ++j) {
      const double a = kPi * j / plane_count;
      Vec w = std::cos(a) * b.col(0) + std::sin(a) * b.col(1);
      if (n == 4) w = std::cos(a) * b.col(0) + std::sin(a) * (std::cos(2 * a) * b.col(1) + std::sin(2 * a) * b.col(2));
      items.push_back({x, FlatSpec(Vec::Zero(n), {x, unit(w)})});
    }
  }
  r.samples.resize(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const AntipodalProbe p = antipodal_probe(K, items[i].x, items[i].plane);
    r.samples[i].kind = "apex";
    r.samples[i].at = items[i].x;
    r.samples[i].score = p.deviation;
  });
  r.details["planes_per_apex"] = n == 2 ? 1 : plane_count;
  r.finalize();
  return r;
}

VerificationReport check_thm3(const BodyPtr& K, int count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) return push(check_thm3(pull(K, *q), count, unframed(o)), *q, {K.get()});
  need_dim(*K, 2, 2, "constant-segment check");
  VerificationReport r = start("thm3", {K.get()}, o);
  const std::vector<Vec> apexes = sampled(2, count, o);
  std::vector<ConeSegment> segs(apexes.size());
  parallel_for(apexes.size(), [&](std::size_t i) { segs[i] = cone_section_segment(K, apexes[i]); });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const ConeSegment& s : segs) {
    lo = std::min(lo, s.length);
    hi = std::max(hi, s.length);
  }
  for (std::size_t i = 0; i < apexes.size(); ++i) r.samples.push_back({"apex", apexes[i], segs[i].length - lo, false, ""});
  r.details["min_length"] = lo;
  r.details["max_length"] = hi;
  double sa = std::numeric_limits<double>::infinity(), sb = -sa;
  for (const ConeSegment& s : segs) {
    sa = std::min({sa, std::sin(s.alpha), std::sin(s.theta)});
    sb = std::max({sb, std::sin(s.alpha), std::sin(s.theta)});
  }
  r.details["support_sine_range"] = {sa, sb};
  r.finalize();
  return r;
}

VerificationReport check_thm4(const BodyPtr& K, int count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) {
    VerificationReport r = push(check_thm4(pull(K, *q), count, unframed(o)), *q, {K.get()});
    r.details["reference_apex"] = vec_json(r.samples.front().at);
    return r;
  }
  need_dim(*K, 3, 3, "projection congruence check");
  VerificationReport r = start("thm4", {K.get()}, o);
  const std::vector<Vec> apexes = sampled(3, count, o);
  std::vector<std::vector<double>> h(apexes.size());
  parallel_for(apexes.size(), [&](std::size_t i) {
    h[i] = centered_support(image_support(K, apexes[i], Hyperplane(apexes[i], 0.0)));
  });
  r.samples.resize(apexes.size());
  parallel_for(apexes.size(), [&](std::size_t i) {
    r.samples[i].kind = "apex";
    r.samples[i].at = apexes[i];
    r.samples[i].score = i == 0 ? 0.0 : alignment_distance(h[i], h[0]);
  });
  r.details["reference_apex"] = vec_json(apexes.front());
  r.details["rotation_grid"] = kAlignGrid;
  r.finalize();
  return r;
}

VerificationReport check_thm6(const BodyPtr& K, const BodyPtr& L, int apex_count, int pts_per_graze,
                              const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim()))
    return push(check_thm6(pull(K, *q), pull(L, *q), apex_count, pts_per_graze, unframed(o)), *q, {K.get(), L.get()});
  need_same_dim(*K, *L);
  need_dim(*K, 3, 3, "graze ellipse check");
  VerificationReport r = start("thm6", {K.get(), L.get()}, o);
  const std::vector<Vec> dirs = sampled(3, apex_count, o);
  r.samples.resize(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    SampleRecord& s = r.samples[i];
    s.kind = "apex";
    s.at = K->support_point(dirs[i]);
    try {
      const GrazeSample g = graze(*L, s.at, pts_per_graze);
      const double diam = diameter(g.points);
      s.score = g.plane_fit.residual / diam;
      if (!g.conic_fit || g.conic_fit->kind != ConicClass::ellipse)
        s.score = std::numeric_limits<double>::infinity();
      else
        s.score = std::max(s.score, g.conic_fit->residual);
    } catch (const ApexError&) {
      s.skipped = true;
      s.note = "apex in L";
    } catch (const GeometryError& e) {
      s.score = std::numeric_limits<double>::infinity();
      s.note = e.what();
    }
  });
  // Conclusion-side: planarity of the shadow boundaries of L.
  double shadow = 0.0;
  for (const Vec& u : sample_sphere(3, 16, {SphereStrategy::low_discrepancy, 0})) {
    const GrazeSample g = shadow_boundary(*L, u, pts_per_graze);
    shadow = std::max(shadow, g.plane_fit.residual / diameter(g.points));
  }
  r.details["shadow_planarity"] = number_json(shadow);
  r.details["ellipsoid_distance"] = number_json(ellipsoid_distance(*L));
  r.finalize();
  return r;
}

ParallelPlanes graze_and_far_trace(const Body& K, const Body& L, const Vec& x, int count) {
  need_same_dim(K, L);
  const GrazeSample g = graze(L, x, count);
  ParallelPlanes out;
  out.graze = g.plane_fit;
  for (const Vec& p : g.points) out.far_points.push_back(K.ray_exit(p, unit(Vec(p - x))));
  out.far = fit_plane(out.far_points);
  out.angle = line_angle(out.graze.plane.normal, out.far.plane.normal);
  return out;
}

VerificationReport check_thm7(const BodyPtr& K, const BodyPtr& L, int apex_count, const CheckOptions& o) {
  if (const Mat* q = frame_of(o, K->dim())) return push(check_thm7(pull(K, *q), pull(L, *q), apex_count, unframed(o)), *q, {K.get(), L.get()});
  need_same_dim(*K, *L);
  need_dim(*K, 3, kMaxDim, "parallel graze check");
  VerificationReport r = start("thm7", {K.get(), L.get()}, o);
  const std::vector<Vec> dirs = sampled(K->dim(), apex_count, o);
  r.samples.resize(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    SampleRecord& s = r.samples[i];
    s.kind = "apex";
    s.at = K->support_point(dirs[i]);
    try {
      const ParallelPlanes pp = graze_and_far_trace(*K, *L, s.at, o.directions);
      s.score = std::max({pp.graze.residual, pp.far.residual, pp.angle});
    } catch (const ApexError&) {
      s.skipped = true;
      s.note = "apex in L";
    }
  });
  r.finalize();
  return r;
}

// --- orbits --------------------------------------------------------------------------------

double OrbitState::support_spread() const {
  if (support_values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(support_values.begin(), support_values.end());
  return *hi - *lo;
}

json OrbitState::to_json() const {
  json pts = json::array();
  for (const Vec& p : points) pts.push_back(vec_json(p));
  return {{"variant", variant == OrbitVariant::thm2 ? "thm2" : "thm3"},
          {"points", pts},
          {"step_angle", step_angle},
          {"step_angles", step_angles},
          {"support_values", support_values},
          {"support_spread", support_spread()},
          {"tangency_residual", tangency_residual},
          {"max_gap", max_gap},
          {"period", period},
          {"distinct_points", distinct_points}};
}

OrbitState run_orbit(const BodyPtr& K, const Vec& x0, int steps, OrbitVariant variant) {
  need_dim(*K, 2, 2, "orbit simulation");
  if (x0.size() != 2 || std::abs(x0.norm() - 1.0) > 1e-9) throw InputError("orbit start must be a unit vector");
  if (steps < 1) throw InputError("orbit needs at least one step");
  for (const Vec& u : probe_directions(2, 256))
    if (!(K->support(u) < 1.0)) throw GeometryError("orbit body must lie in the open unit disc");
  OrbitState st;
  st.variant = variant;
  st.points.push_back(unit(x0));
  const Vec inner = K->interior_point();
  for (int i = 0; i < steps; ++i) {
    const Vec& x = st.points.back();
    const Vec p = variant == OrbitVariant::thm2 ? Vec(-x) : x;
    const GrazeSample g = graze(*K, p, 2);
    if (g.points.size() != 2) throw GeometryError("tangent construction failed");
    // Left support line as seen from p looking at O.
    auto side = [&](const Vec& t) { return -p[0] * (t[1] - p[1]) + p[1] * (t[0] - p[0]); };
    const Vec& t = side(g.points[0]) > side(g.points[1]) ? g.points[0] : g.points[1];
    const Vec d = unit(Vec(t - p));
    const Vec next = unit(Vec(p - 2.0 * p.dot(d) * d));
    Vec nu = perp(d);
    if (nu.dot(p) < nu.dot(inner)) nu = -nu;
    st.tangency_residual = std::max(st.tangency_residual, std::abs(K->support(nu) - p.dot(nu)));
    st.support_values.push_back(std::abs(p[0] * d[1] - p[1] * d[0]));
    st.step_angles.push_back(vector_angle(next, x));
    st.points.push_back(next);
  }
  double sum = 0.0;
  for (double a : st.step_angles) sum += a;
  st.step_angle = sum / static_cast<double>(st.step_angles.size());
  std::vector<double> ang;
  for (const Vec& p : st.points) ang.push_back(std::atan2(p[1], p[0]));
  std::sort(ang.begin(), ang.end());
  st.max_gap = 2 * kPi - (ang.back() - ang.front());
  for (std::size_t i = 1; i < ang.size(); ++i) st.max_gap = std::max(st.max_gap, ang[i] - ang[i - 1]);
  for (std::size_t i = 1; i < st.points.size() && st.period == 0; ++i)
    if ((st.points[i] - st.points[0]).norm() < 1e-9) st.period = static_cast<int>(i);
  std::vector<Vec> reps;
  for (const Vec& p : st.points)
    if (std::none_of(reps.begin(), reps.end(), [&](const Vec& q) { return (p - q).norm() < 1e-6; })) reps.push_back(p);
  st.distinct_points = static_cast<int>(reps.size());
  return st;
}

VerificationReport check_orbit(const BodyPtr& K, const Vec& x0, int steps, OrbitVariant variant, const CheckOptions& o) {
  VerificationReport r = start(variant == OrbitVariant::thm2 ? "orbit-thm2" : "orbit-thm3", {K.get()}, o);
  const OrbitState st = run_orbit(K, x0, steps, variant);
  for (std::size_t i = 0; i < st.support_values.size(); ++i)
    r.samples.push_back({"point", st.points[i], std::abs(st.support_values[i] - st.support_values.front()), false, ""});
  r.details["orbit"] = st.to_json();
  r.finalize();
  return r;
}

VerificationReport check_chord_midpoints(const FloatingSpec& spec, int count, const CheckOptions& o) {
  VerificationReport r = start("floating", {spec.body.get()}, o);
  const MidpointCheck mc = tangent_chord_midpoint_check(spec, count);
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < mc.cuts.size(); ++i) {
    SampleRecord s{"direction", mc.cuts[i].direction, mc.deviations[i], !mc.tangent[i], mc.tangent[i] ? "" : "redundant cut"};
    r.samples.push_back(s);
    if (mc.tangent[i] && !first) first = i;
  }
  r.details["delta"] = spec.delta;
  json poly = json::array();
  const PolytopeV fp = floating_polygon(mc.cuts);
  for (const Vec& v : fp.vertices()) poly.push_back(vec_json(v));
  r.details["floating_polygon"] = poly;
  if (first) {
    const CapCut& c = mc.cuts[*first];
    const auto ch = chord(*spec.body, c.direction, c.offset);
    r.details["chord"] = {{"a", vec_json(ch->a)}, {"b", vec_json(ch->b)}, {"midpoint", vec_json(mc.midpoints[*first])}};
  }
  r.finalize();
  return r;
}

// --- conclusion-side scores -----------------------------------------------------------

double ellipsoid_distance(const Body& K, int samples) {
  const int n = K.dim();
  const Vec c = K.interior_point();
  std::vector<Vec> pts;
  for (const Vec& u : sample_sphere(n, samples, {})) pts.push_back(K.ray_exit(c, u));
  Vec mean = Vec::Zero(n);
  for (const Vec& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double scale = 0.0;
  for (const Vec& p : pts) scale += (p - mean).squaredNorm();
  scale = std::sqrt(scale / static_cast<double>(pts.size()));
  const int m = (n + 1) * (n + 2) / 2;
  if (static_cast<int>(pts.size()) < 2 * m) throw InputError("too few samples for a quadric fit");
  // Monomials: y_i y_j (i <= j, off-diagonal scaled by sqrt 2), y_i, 1.
  auto row = [&](const Vec& y) {
    Eigen::VectorXd r(m);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) r[k++] = (i == j ? 1.0 : std::sqrt(2.0)) * y[i] * y[j];
    for (int i = 0; i < n; ++i) r[k++] = y[i];
    r[k] = 1.0;
    return r;
  };
  Eigen::MatrixXd d(pts.size(), m);
  for (std::size_t i = 0; i < pts.size(); ++i) d.row(static_cast<Eigen::Index>(i)) = row((pts[i] - mean) / scale);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinV);
  const Eigen::VectorXd q = svd.matrixV().col(m - 1);
  double worst = 0.0;
  for (const Vec& p : pts) {
    const Vec y = (p - mean) / scale;
    Vec grad = Vec::Zero(n);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double w = (i == j ? 1.0 : std::sqrt(2.0)) * q[k++];
        grad[i] += w * y[j];
        grad[j] += w * y[i];
      }
    for (int i = 0; i < n; ++i) grad[i] += q[k++];
    const double g = grad.norm();
    const double v = std::abs(row(y).dot(q));
    worst = std::max(worst, g > 0 ? v / g : std::numeric_limits<double>::infinity());
  }
  return worst;
}

double ball_distance(const Body& K, int samples) {
  const int n = K.dim();
  const std::vector<Vec> dirs = sample_sphere(n, samples, {});
  Vec s = Vec::Zero(n);
  double width = 0.0;
  for (const Vec& u : dirs) {
    s += K.support(u) * u;
    width += K.support(u) + K.support(-u);
  }
  s *= static_cast<double>(n) / static_cast<double>(dirs.size());
  width /= static_cast<double>(dirs.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Vec& u : dirs) {
    const double g = K.support(u) - s.dot(u);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return (hi - lo) / width;
}

// --- sweeps ----------------------------------------------------------------------------

std::string to_string(ConjectureId id) {
  switch (id) {
    case ConjectureId::C1: return "C1";
    case ConjectureId::C2: return "C2";
    case ConjectureId::C3: return "C3";
    case ConjectureId::P1: return "P1";
  }
  return "?";
}

ConjectureId conjecture_from_string(const std::string& s) {
  for (ConjectureId id : {ConjectureId::C1, ConjectureId::C2, ConjectureId::C3, ConjectureId::P1})
    if (to_string(id) == s) return id;
  throw InputError("unknown conjecture id '" + s + "' (expected C1, C2, C3 or P1)");
}

json SweepReport::to_json() const {
  json rs = json::array();
  for (const SweepRow& row : rows)
    rs.push_back({{"epsilon", row.epsilon},
                  {"hypothesis_score", number_json(row.hypothesis)},
                  {"conclusion_score", number_json(row.conclusion)},
                  {"extra", row.extra}});
  return {{"conjecture", to_string(id)}, {"family", family}, {"tolerance", tolerance}, {"rows", rs},
          {"candidates", candidates}};
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "epsilon,hypothesis_score,conclusion_score\n";
  for (const SweepRow& row : rows)
    os << format_double(row.epsilon) << ',' << format_double(row.hypothesis) << ',' << format_double(row.conclusion)
       << '\n';
  return os.str();
}

P1Scores antipodal_image_scores(const BodyPtr& K, const Vec& x) {
  const int n = K->dim();
  P1Scores out;
  if (n == 2) {
    const double d = std::abs(cone_section_segment(K, x).length - cone_section_segment(K, -x).length);
    out = {d, d, d};
    return out;
  }
  if (n != 3) throw UnsupportedError("antipodal image comparison is implemented for n = 2, 3");
  const Hyperplane plane(x, 0.0);
  const std::vector<double> hp = image_support(K, x, plane), hm = image_support(K, -x, plane);
  const std::vector<double> cp = centered_support(hp), cm = centered_support(hm);
  out.congruence = alignment_distance(cp, cm);
  out.translation = sup_distance(cp, cm);
  const double ap = support_area(hp), am = support_area(hm);
  out.volume = std::abs(ap - am) / (0.5 * (ap + am));
  return out;
}

SweepReport explore_conjecture(ConjectureId id, const SweepFamily& family, int budget, const CheckOptions& o) {
  if (budget < 1) throw InputError("sweep budget must be positive");
  if (family.values.empty() || !family.make) throw InputError("sweep family needs values and a generator");
  SweepReport rep;
  rep.id = id;
  rep.family = family.name;
  rep.tolerance = o.tolerance;
  for (double eps : family.values) {
    const BodyPair pair = family.make(eps);
    if (!pair.K) throw InputError("sweep family produced no body");
    SweepRow row;
    row.epsilon = eps;
    switch (id) {
      case ConjectureId::C1: {
        if (!pair.L) throw InputError("C1 sweeps need an inner body");
        need_dim(*pair.L, 3, kMaxDim, "C1 sweep");
        double worst = 0.0;
        int skipped = 0;
        for (const Vec& u : sampled(pair.K->dim(), budget, o)) {
          try {
            const GrazeSample g = graze(*pair.L, pair.K->support_point(u), o.directions);
            worst = std::max(worst, g.plane_fit.residual / diameter(g.points));
          } catch (const ApexError&) {
            ++skipped;
          }
        }
        row.hypothesis = worst;
        row.conclusion = ellipsoid_distance(*pair.L);
        row.extra = {{"skipped", skipped}};
        break;
      }
      case ConjectureId::C2: {
        if (!pair.L) throw InputError("C2 sweeps need an inner body");
        const VerificationReport r = check_conj2(pair.K, pair.L, budget, o);
        row.hypothesis = r.max_violation;
        row.conclusion = std::max(ellipsoid_distance(*pair.K), ellipsoid_distance(*pair.L));
        row.extra = {{"tolerance", r.tolerance}};
        break;
      }
      case ConjectureId::C3: {
        const Vec q = volume_centroid(*pair.K, o);
        const VerificationReport r = check_conj3(pair.K, q, budget, o);
        row.hypothesis = r.max_violation;
        row.conclusion = r.details["asymmetry_about_q"].get<double>();
        row.extra = {{"q", vec_json(q)}, {"tolerance", r.tolerance}};
        break;
      }
      case ConjectureId::P1: {
        need_dim(*pair.K, 2, 3, "P1 sweep");
        P1Scores worst;
        for (const Vec& x : sampled(pair.K->dim(), budget, o)) {
          const P1Scores s = antipodal_image_scores(pair.K, x);
          worst.congruence = std::max(worst.congruence, s.congruence);
          worst.translation = std::max(worst.translation, s.translation);
          worst.volume = std::max(worst.volume, s.volume);
        }
        const Vec q = volume_centroid(*pair.K, o);
        row.hypothesis = worst.congruence;
        row.conclusion = symmetric_about(*pair.K, q, 256).asymmetry;
        row.extra = {{"congruence", worst.congruence},
                     {"translation", worst.translation},
                     {"volume", worst.volume},
                     {"ball_distance", ball_distance(*pair.K)}};
        break;
      }
    }
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    if (rep.rows[i].hypothesis < o.tolerance && rep.rows[i].conclusion > 10 * o.tolerance)
      rep.candidates.push_back(static_cast<int>(i));
  return rep;
}

}  // namespace tomo
