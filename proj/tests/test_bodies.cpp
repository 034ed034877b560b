#include "doctest.h"
#include "oracles.hpp"

#include "tomoscope/body.hpp"
#include "tomoscope/errors.hpp"

#include <cmath>
#include <random>

using namespace tomo;

namespace {

Mat diag(std::initializer_list<double> d) {
  const Vec v = make_vec(d);
  return Mat(v.asDiagonal());
}

std::vector<BodyPtr> strictly_convex_zoo() {
  std::vector<BodyPtr> zoo;
  zoo.push_back(std::make_shared<Ball>(make_vec({0.2, -0.1}), 0.7));
  zoo.push_back(std::make_shared<Ball>(make_vec({0.1, 0.2, -0.3}), 1.3));
  zoo.push_back(std::make_shared<Ellipsoid>(make_vec({0.3, 0.1}), diag({0.25, 1.0})));
  Mat a(3, 3);
  a << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  zoo.push_back(std::make_shared<Ellipsoid>(make_vec({0.0, 0.5, -0.2}), a));
  zoo.push_back(std::make_shared<Ellipsoid>(make_vec({0, 0, 0, 0.1}), diag({1.0, 2.0, 0.5, 1.5})));
  zoo.push_back(std::make_shared<PerturbedBall>(make_vec({0.1, 0.0}), 1.0, 0.05,
                                                std::vector<HarmonicMode>{{0, 3, 1.0}, {0, -2, 0.5}}));
  zoo.push_back(std::make_shared<PerturbedBall>(make_vec({0.0, 0.1, 0.0}), 1.0, 0.05,
                                                std::vector<HarmonicMode>{{3, 1, 1.0}, {2, 0, 0.4}}));
  const BodyPtr e3 = zoo[3];
  zoo.push_back(section(e3, Hyperplane(make_vec({0.2, 0.1, 1.0}), 0.1)).body);
  zoo.push_back(std::make_shared<SectionBody>(e3, Hyperplane(make_vec({0.2, 0.1, 1.0}), 0.1)));
  zoo.push_back(orth_project(e3, make_vec({1.0, 1.0, 0.5})).body);
  zoo.push_back(std::make_shared<ProjectionBody>(e3, make_vec({1.0, 1.0, 0.5})));
  Mat m(3, 3);
  m << 1.0, 0.2, 0.0, 0.0, 0.8, 0.1, 0.3, 0.0, 1.2;
  zoo.push_back(std::make_shared<AffineBody>(zoo[6], m, make_vec({0.1, 0.2, 0.3})));
  return zoo;
}

}  // namespace

TEST_CASE("support points realize the support function and sit on the boundary") {
  for (const BodyPtr& k : strictly_convex_zoo()) {
    CAPTURE(k->describe().dump());
    const auto dirs = sample_sphere(k->dim(), 256, {SphereStrategy::uniform_random, 9});
    for (const Vec& u : dirs) {
      const Vec s = k->support_point(u);
      CHECK(std::abs(s.dot(u) - k->support(u)) <= 1e-9);
      CHECK(k->contains(s - 1e-6 * u));
      CHECK_FALSE(k->contains(s + 1e-6 * u));
    }
    CHECK(k->contains(k->interior_point()));
  }
}

TEST_CASE("support functions are sublinear on sampled triples") {
  std::mt19937_64 rng(4);
  for (const BodyPtr& k : strictly_convex_zoo()) {
    const int n = k->dim();
    const auto dirs = sample_sphere(n, 96, {SphereStrategy::uniform_random, 17});
    auto big_h = [&](const Vec& v) { return v.norm() * k->support(v / v.norm()); };
    for (std::size_t i = 0; i + 1 < dirs.size(); i += 2) {
      std::uniform_real_distribution<double> w(0.1, 2.0);
      const Vec a = w(rng) * dirs[i], b = w(rng) * dirs[i + 1];
      CHECK(big_h(a + b) <= big_h(a) + big_h(b) + 1e-9);
    }
  }
}

TEST_CASE("ray_exit lands on the boundary") {
  for (const BodyPtr& k : strictly_convex_zoo()) {
    CAPTURE(k->describe().dump());
    const int n = k->dim();
    const Vec z = k->interior_point();
    const auto probes = sample_sphere(n, 128, {});
    for (const Vec& d : sample_sphere(n, 24, {SphereStrategy::uniform_random, 3})) {
      const Vec e = k->ray_exit(z, d);
      double worst = -1e300;
      for (const Vec& u : probes) {
        CHECK(e.dot(u) <= k->support(u) + 1e-9);
      }
      const Vec nu = k->normal_at(e, d);
      worst = e.dot(nu) - k->support(nu);
      CHECK(std::abs(worst) <= 1e-8);
    }
  }
}

TEST_CASE("section of the unit ball") {
  const BodyPtr ball = std::make_shared<Ball>(make_vec({0, 0, 0}), 1.0);
  const Section s = section(ball, Hyperplane(make_vec({0, 0, 1}), 0.5));
  for (const Vec& w : sample_sphere(2, 16, {})) CHECK(std::abs(s.body->support(w) - std::sqrt(3.0) / 2) < 1e-9);
  const Section c = section(ball, Hyperplane(make_vec({0, 0, 1}), 0.0));
  for (const Vec& w : sample_sphere(2, 16, {})) CHECK(std::abs(c.body->support(w) - 1.0) < 1e-12);
  CHECK_THROWS_AS(section(ball, Hyperplane(make_vec({0, 0, 1}), 2.0)), EmptySectionError);
  CHECK_THROWS_AS(SectionBody(ball, Hyperplane(make_vec({0, 0, 1}), 2.0)), EmptySectionError);
  // Generic path agrees with the exact one.
  const SectionBody g(std::make_shared<oracle::OpaqueBall>(make_vec({0, 0, 0}), 1.0),
                      Hyperplane(make_vec({0, 0, 1}), 0.5));
  for (const Vec& w : sample_sphere(2, 16, {})) CHECK(std::abs(g.support(w) - std::sqrt(3.0) / 2) < 1e-9);
  // Chart round trip.
  const Vec local = make_vec({0.3, -0.2});
  CHECK((s.chart.to_local(s.chart.to_world(local)) - local).norm() < 1e-14);
  CHECK(std::abs(s.chart.to_world(local)[2] - 0.5) < 1e-14);
}

TEST_CASE("ellipsoid sections agree with the generic section oracle") {
  Mat a(3, 3);
  a << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const BodyPtr e = std::make_shared<Ellipsoid>(make_vec({0.0, 0.5, -0.2}), a);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec nu = unit(make_vec({d(rng), d(rng), 1.0}));
    const Hyperplane h(nu, nu.dot(e->interior_point()) + d(rng));
    const Section exact = section(e, h);
    REQUIRE(exact.body->kind() == "ellipsoid");
    const SectionBody generic(e, h);
    for (const Vec& w : sample_sphere(2, 32, {})) {
      CHECK(std::abs(exact.body->support(w) - generic.support(w)) < 1e-9);
      CHECK((exact.body->support_point(w) - generic.support_point(w)).norm() < 1e-6);
    }
  }
}

TEST_CASE("orthogonal projections") {
  const BodyPtr ball = std::make_shared<Ball>(make_vec({0.3, 0.1, -0.2}), 0.8);
  const Projection pb = orth_project(ball, make_vec({1, 2, 3}));
  for (const Vec& w : sample_sphere(2, 16, {})) CHECK(std::abs(pb.body->support(w) - pb.chart.dir_to_world(w).dot(make_vec({0.3, 0.1, -0.2})) - 0.8) < 1e-12);

  const BodyPtr e = std::make_shared<Ellipsoid>(make_vec({0, 0, 0}), diag({0.25, 1, 1}));
  const Projection pe = orth_project(e, make_vec({0, 0, 1}));
  for (const Vec& w : sample_sphere(2, 32, {})) {
    const Vec v = pe.chart.dir_to_world(w);
    CHECK(std::abs(pe.body->support(w) - std::sqrt(4 * v[0] * v[0] + v[1] * v[1])) < 1e-12);
  }

  std::vector<Vec> cube;
  for (int i = 0; i < 8; ++i) cube.push_back(make_vec({i & 1 ? 1.0 : -1.0, i & 2 ? 1.0 : -1.0, i & 4 ? 1.0 : -1.0}));
  const BodyPtr c = std::make_shared<PolytopeV>(cube);
  const Projection pc = orth_project(c, make_vec({0, 0, 1}));
  for (const Vec& w : sample_sphere(2, 32, {})) {
    const Vec v = pc.chart.dir_to_world(w);
    CHECK(std::abs(pc.body->support(w) - (std::abs(v[0]) + std::abs(v[1]))) < 1e-12);
  }
  CHECK(dynamic_cast<const PolytopeV&>(*pc.body).vertices().size() == 4);
}

TEST_CASE("projection support equals the parent support on the orthogonal complement") {
  Mat a(3, 3);
  a << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const BodyPtr e = std::make_shared<Ellipsoid>(make_vec({0.0, 0.5, -0.2}), a);
  const BodyPtr pert = std::make_shared<PerturbedBall>(make_vec({0.0, 0.1, 0.0}), 1.0, 0.05,
                                                       std::vector<HarmonicMode>{{3, 1, 1.0}});
  for (const BodyPtr& k : {e, pert}) {
    for (const Vec& u : sample_sphere(3, 5, {SphereStrategy::uniform_random, 2})) {
      const Projection p = orth_project(k, u);
      const ProjectionBody generic(k, u);
      for (const Vec& v : sample_sphere(3, 64, {SphereStrategy::uniform_random, 5})) {
        const Vec vp = unit(Vec(v - v.dot(u) * u));
        const Vec local = p.chart.dir_to_local(vp);
        CHECK(std::abs(p.body->support(local) - k->support(vp)) < 1e-12);
        CHECK(std::abs(generic.support(generic.chart().dir_to_local(vp)) - k->support(vp)) < 1e-12);
      }
    }
  }
}

TEST_CASE("generic projection membership matches the exact projection") {
  Mat a(3, 3);
  a << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const BodyPtr e = std::make_shared<Ellipsoid>(make_vec({0.0, 0.5, -0.2}), a);
  const Vec u = unit(make_vec({0.3, -1.0, 0.4}));
  const Projection exact = orth_project(e, u);
  const ProjectionBody generic(e, u);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  int disagreements = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec p = make_vec({d(rng), d(rng)});
    if (exact.body->contains(p) != generic.contains(p)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("central projections") {
  const BodyPtr disc = std::make_shared<Ball>(make_vec({0, 0}), 0.6);
  const Vec x = make_vec({1, 0});
  const CentralProjection cp = central_project(disc, x, Hyperplane(x, 0.0));
  CHECK(std::abs(cp.length - 1.5) < 1e-8);
  CHECK(std::abs(cp.a[0] + 0.75) < 1e-8);
  CHECK(std::abs(cp.b[0] - 0.75) < 1e-8);

  const BodyPtr ball = std::make_shared<Ball>(make_vec({0, 0, 0}), 1.0);
  const Vec apex = make_vec({0, 0, 2});
  const CentralProjection c3 = central_project(ball, apex, Hyperplane(make_vec({0, 0, 1}), 0.0), 32);
  for (std::size_t i = 0; i < c3.support.size(); ++i) {
    CHECK(std::abs(c3.support[i] - 2.0 / std::sqrt(3.0)) < 1e-6);
    CHECK(std::abs(c3.boundary[i].norm() - 2.0 / std::sqrt(3.0)) < 1e-6);
  }
  CHECK_THROWS_AS(central_project(ball, make_vec({0, 0, 0.5}), Hyperplane(make_vec({0, 0, 1}), 0.0)), ApexError);
  CHECK_THROWS_AS(central_project(ball, make_vec({2, 0, 0}), Hyperplane(make_vec({0, 0, 1}), -2.0)),
                  ProjectionOverflowError);
}

TEST_CASE("central projection of an ellipse matches tangent-line geometry") {
  // Ellipse x^2/0.25 + y^2/0.09 <= 1 from apex (0.2, 0.9) onto the x-axis.
  const BodyPtr e = std::make_shared<Ellipsoid>(make_vec({0, 0}), diag({4.0, 1.0 / 0.09}));
  const Vec x = make_vec({0.2, 0.9});
  const CentralProjection cp = central_project(e, x, Hyperplane(make_vec({0, 1}), 0.0));
  // Independent oracle: map to the unit circle, take circle tangents, map back.
  const Vec xs = make_vec({x[0] / 0.5, x[1] / 0.3});
  const auto [t1, t2] = oracle::circle_tangent_points(make_vec({0, 0}), 1.0, xs);
  auto hit = [&](const Vec& ts) {
    const Vec p = make_vec({ts[0] * 0.5, ts[1] * 0.3});
    const double lam = x[1] / (x[1] - p[1]);
    return x[0] + lam * (p[0] - x[0]);
  };
  const double a = std::min(hit(t1), hit(t2)), b = std::max(hit(t1), hit(t2));
  const double chart_sign = cp.chart.basis(0, 0);
  const double ca = std::min(chart_sign * cp.a[0], chart_sign * cp.b[0]);
  const double cb = std::max(chart_sign * cp.a[0], chart_sign * cp.b[0]);
  CHECK(std::abs(ca - a) < 1e-9);
  CHECK(std::abs(cb - b) < 1e-9);
}

TEST_CASE("centroids") {
  const BodyPtr ball = std::make_shared<Ball>(make_vec({0.3, -0.2, 0.1}), 0.5);
  const CentroidResult mc = centroid(*ball, {CentroidMethod::monte_carlo, 1, 200000});
  CHECK((mc.value - make_vec({0.3, -0.2, 0.1})).norm() < 5 * mc.error + 1e-12);
  CHECK(mc.error < 1e-3);

  const PolytopeV tri({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})});
  const CentroidResult ct = centroid(tri);
  CHECK((ct.value - make_vec({1.0 / 3, 1.0 / 3})).norm() < 1e-9);
  CHECK((tri.centroid() - make_vec({1.0 / 3, 1.0 / 3})).norm() < 1e-14);

  const oracle::HalfDisc half;
  const CentroidResult ch = centroid(half);
  CHECK(std::abs(ch.value[0]) < 1e-6);
  CHECK(std::abs(ch.value[1] - 4.0 / (3.0 * kPi)) < 1e-6);
  const CentroidResult chm = centroid(half, {CentroidMethod::monte_carlo, 3, 200000});
  CHECK(std::abs(chm.value[1] - 4.0 / (3.0 * kPi)) < 5 * chm.error);

  CHECK_THROWS_AS(centroid(*ball), InputError);
}

TEST_CASE("Monte Carlo centroid error shrinks like N^-1/2") {
  const oracle::HalfDisc half;
  const double truth = 4.0 / (3.0 * kPi);
  auto rms = [&](int n) {
    double s = 0.0;
    for (int seed = 0; seed < 40; ++seed) {
      const double e = centroid(half, {CentroidMethod::monte_carlo, static_cast<std::uint64_t>(seed), n}).value[1] - truth;
      s += e * e;
    }
    return std::sqrt(s / 40);
  };
  const double ratio = rms(4000) / rms(16000);
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.9);
}

TEST_CASE("nested_check") {
  const Ball unit_ball(make_vec({0, 0, 0}), 1.0), big(make_vec({0, 0, 0}), 2.0);
  NestedResult r = nested_check(unit_ball, big, 0.5);
  CHECK(r.nested);
  CHECK(std::abs(r.slack - 1.0) < 1e-12);
  CHECK_FALSE(nested_check(unit_ball, unit_ball).nested);
  const Ellipsoid e(make_vec({0, 0, 0}), diag({0.25, 1, 1}));
  r = nested_check(e, Ball(make_vec({0, 0, 0}), 1.9), 0.0);
  CHECK_FALSE(r.nested);
  CHECK(std::abs(r.slack + 0.1) < 1e-12);
}

TEST_CASE("polytope facets, volume and centroid") {
  std::vector<Vec> cube;
  for (int i = 0; i < 8; ++i) cube.push_back(make_vec({i & 1 ? 1.0 : 0.0, i & 2 ? 2.0 : 0.0, i & 4 ? 3.0 : 0.0}));
  cube.push_back(make_vec({0.5, 1.0, 1.5}));  // interior point is not a vertex
  const PolytopeV box(cube);
  CHECK(box.vertices().size() == 8);
  CHECK(box.facets().size() == 6);
  CHECK(box.volume() == doctest::Approx(6.0).epsilon(1e-12));
  CHECK((box.centroid() - make_vec({0.5, 1.0, 1.5})).norm() < 1e-12);
  const Vec e = box.ray_exit(make_vec({0.5, 1.0, 1.5}), make_vec({1, 0, 0}));
  CHECK((e - make_vec({1.0, 1.0, 1.5})).norm() < 1e-12);
  CHECK((box.normal_at(e, make_vec({0, 1, 0})) - make_vec({1, 0, 0})).norm() < 1e-12);
  // Triangular prism: exact volume by base area times height.
  const PolytopeV prism({make_vec({0, 0, 0}), make_vec({1, 0, 0}), make_vec({0, 1, 0}), make_vec({0, 0, 2}),
                         make_vec({1, 0, 2}), make_vec({0, 1, 2})});
  CHECK(prism.volume() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((prism.centroid() - make_vec({1.0 / 3, 1.0 / 3, 1.0})).norm() < 1e-12);
  CHECK_THROWS_AS(PolytopeV({make_vec({0, 0}), make_vec({1, 1}), make_vec({2, 2})}), InputError);
}

TEST_CASE("perturbed ball certificate and Gauss map") {
  // h + h'' = 1 - 8 eps cos(3t): convex iff eps < 1/8.
  CHECK_NOTHROW(PerturbedBall(make_vec({0, 0}), 1.0, 0.12, {{0, 3, 1.0}}));
  CHECK_THROWS_AS(PerturbedBall(make_vec({0, 0}), 1.0, 0.13, {{0, 3, 1.0}}), GeometryError);
  const PerturbedBall p(make_vec({0, 0}), 1.0, 0.1, {{0, 3, 1.0}});
  CHECK(p.min_curvature_radius() == doctest::Approx(0.2).epsilon(1e-9));
  for (double t = 0.0; t < 2 * kPi; t += 0.1) {
    const Vec u = make_vec({std::cos(t), std::sin(t)});
    CHECK(std::abs(p.support(u) - (1.0 + 0.1 * std::cos(3 * t))) < 1e-12);
    const Vec s = p.support_point(u);
    CHECK((p.normal_at(s, make_vec({1, 0})) - u).norm() < 1e-9);
  }
  const PerturbedBall q(make_vec({0, 0, 0}), 1.0, 0.05, {{2, 1, 1.0}, {3, -2, 0.5}});
  for (const Vec& u : sample_sphere(3, 64, {})) {
    const Vec s = q.support_point(u);
    CHECK((q.normal_at(s, u) - u).norm() < 1e-9);
    const Vec e = q.ray_exit(make_vec({0.1, 0, 0}), u);
    CHECK(std::abs(e.dot(q.normal_at(e, u)) - q.support(q.normal_at(e, u))) < 1e-10);
  }
  CHECK_THROWS_AS(PerturbedBall(make_vec({0, 0, 0, 0}), 1.0, 0.05, {}), InputError);
  CHECK_THROWS_AS(PerturbedBall(make_vec({0, 0, 0}), 1.0, 0.05, {{1, 3, 1.0}}), InputError);
}

TEST_CASE("solid harmonics are harmonic and homogeneous") {
  for (int l = 0; l <= 5; ++l)
    for (int m = -l; m <= l; ++m) {
      const Polynomial p = solid_harmonic(l, m);
      CHECK(p.degree() == l);
      const Polynomial lap = laplacian(p);
      double worst = 0.0;
      for (const auto& [e, c] : lap.terms()) worst = std::max(worst, std::abs(c));
      CHECK(worst < 1e-9);
      const Vec x = make_vec({0.3, -0.7, 0.5});
      CHECK(std::abs(p.eval(2.0 * x) - std::pow(2.0, l) * p.eval(x)) < 1e-9);
    }
  const Polynomial c3 = planar_harmonic(3);
  CHECK(std::abs(c3.eval(make_vec({std::cos(0.4), std::sin(0.4)})) - std::cos(1.2)) < 1e-14);
  const Polynomial s2 = planar_harmonic(-2);
  CHECK(std::abs(s2.eval(make_vec({std::cos(0.4), std::sin(0.4)})) - std::sin(0.8)) < 1e-14);
}

TEST_CASE("affine images stay exact for ellipsoids and balls") {
  const BodyPtr ball = std::make_shared<Ball>(make_vec({0.1, 0.2, 0.3}), 0.5);
  Mat m(3, 3);
  m << 1.0, 0.2, 0.0, 0.0, 0.8, 0.1, 0.3, 0.0, 1.2;
  const Vec b = make_vec({0.1, -0.3, 0.2});
  const BodyPtr exact = affine_image(ball, m, b);
  CHECK(exact->kind() == "ellipsoid");
  const AffineBody generic(ball, m, b);
  for (const Vec& u : sample_sphere(3, 64, {})) {
    CHECK(std::abs(exact->support(u) - generic.support(u)) < 1e-12);
    CHECK((exact->support_point(u) - generic.support_point(u)).norm() < 1e-12);
  }
  const Mat rot = random_orthogonal(3, 4);
  CHECK(affine_image(ball, rot, b)->kind() == "ball");
}

TEST_CASE("chord integrals reproduce areas") {
  const Ball disc(make_vec({0.2, 0.1}), 1.0);
  const Vec u = unit(make_vec({1, 2}));
  const double c = u.dot(make_vec({0.2, 0.1}));
  const Integral full = chord_integral(disc, u, c - 1.0, c + 1.0, 0);
  CHECK(std::abs(full.value - kPi) < 1e-10);
  const Integral cap = chord_integral(disc, u, c + 0.3, c + 1.0, 0);
  CHECK(std::abs(cap.value - oracle::disc_segment_area(1.0, 0.3)) < 1e-10);
  CHECK(chord_length(disc, u, c + 2.0) == 0.0);
}
