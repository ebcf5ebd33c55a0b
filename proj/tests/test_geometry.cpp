#include <doctest.h>

#include <cmath>
#include <random>

#include "parabem/error.hpp"
#include "parabem/geometry.hpp"

using namespace parabem;

namespace {

const std::vector<Vec3> kCenters = {
    {0, 0, 1}, {1, 0, 0}, {0, -1, 0}, {0, 0, -1}};

nlohmann::json sphere_spec(double amp = 0.1) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : kCenters) centers.push_back({c(0), c(1), c(2)});
  return {{"reference", "sphere"},
          {"modes",
           {{"count", 4}, {"theta", 2.0}, {"amplitude", amp}, {"centers", centers}}}};
}

// Direct evaluation of phi_0 + sum_j y_j c_j beta(|x - c|) n on the unit sphere.
Vec3 oracle_point(const Vec3& x, const std::vector<double>& y, double amp) {
  Vec3 r = x;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = (x - kCenters[j]).squaredNorm();
    const double beta = s < 1 ? std::pow(1 - s, 3) : 0.0;
    r += y[j] * amp * std::pow(j + 1.0, -2.0) * beta * x / x.norm();
  }
  return r;
}

double imag_norm(const CVec3& v) { return v.imag().norm(); }

}  // namespace

TEST_CASE("eval_surface with zero parameters returns the reference point") {
  const ParametricSurface s = surface_from_json(sphere_spec());
  const ComplexParamPoint z = ComplexParamPoint::real({0, 0, 0, 0});
  for (int p = 0; p < 6; ++p) {
    const Vec2 u(0.3, -0.7);
    const CVec3 x = eval_surface(s, z, p, u);
    CHECK((x.real() - s.patch(p).point(u)).norm() < 1e-15);
    CHECK(std::abs(x.real().norm() - 1.0) < 1e-14);
  }
}

TEST_CASE("a constant mode shifts the flat chart") {
  const Vec3 c(0.1, -0.2, 0.3);
  ParametricSurface s({flat_chart(0, Rect{-1, 1, -1, 1})}, AffineMap{},
                      {Mode::constant(c)});
  const CVec3 x = eval_surface(s, ComplexParamPoint::real({1.0}), 0, Vec2(0.25, 0.5));
  CHECK((x.real() - Vec3(0.35, 0.3, 0.3)).norm() < 1e-15);
  CHECK(imag_norm(x) == 0.0);
}

TEST_CASE("sphere deformation matches a direct formula at random points") {
  const double amp = 0.1;
  const ParametricSurface s = surface_from_json(sphere_spec(amp));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u11(-1, 1);
  for (int k = 0; k < 10; ++k) {
    const int p = k % 6;
    const Vec2 u(u11(rng), u11(rng));
    const std::vector<double> y{u11(rng), u11(rng), u11(rng), u11(rng)};
    const CVec3 x = eval_surface(s, ComplexParamPoint::real(y), p, u);
    const Vec3 ref = s.patch(p).point(u);
    CHECK((x.real() - oracle_point(ref, y, amp)).norm() < 1e-14);
    CHECK(imag_norm(x) <= 1e-14);
  }
}

TEST_CASE("gramian of isometric and scaled flat charts") {
  ParametricSurface flat({flat_chart(0, Rect{-1, 1, -1, 1})}, AffineMap{}, {});
  const ComplexParamPoint z = ComplexParamPoint::real({});
  GramianData g = gramian(flat, z, 0, Vec2(0.1, 0.2));
  CHECK(std::abs(g.matrix(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(g.matrix(0, 1)) < 1e-15);
  CHECK(std::abs(g.det - 1.0) < 1e-15);
  CHECK(std::abs(g.sqrt_det - 1.0) < 1e-15);

  ParametricSurface scaled({flat_chart(0, Rect{-1, 1, -1, 1}, 2.0)}, AffineMap{}, {});
  g = gramian(scaled, z, 0, Vec2(0.1, 0.2));
  CHECK(std::abs(g.det - 16.0) < 1e-13);
  CHECK(std::abs(g.sqrt_det - 4.0) < 1e-14);
}

TEST_CASE("gramian agrees with finite differences of the direct formula") {
  const double amp = 0.1;
  const ParametricSurface s = surface_from_json(sphere_spec(amp));
  const std::vector<double> y{0.5, -0.4, 0.9, 0.2};
  const double h = 1e-5;
  for (int p = 0; p < 6; ++p) {
    const Vec2 u(0.2, -0.1);
    auto r = [&](const Vec2& w) { return oracle_point(s.patch(p).point(w), y, amp); };
    const Vec3 tu = (r(u + Vec2(h, 0)) - r(u - Vec2(h, 0))) / (2 * h);
    const Vec3 tv = (r(u + Vec2(0, h)) - r(u - Vec2(0, h))) / (2 * h);
    const double det = tu.dot(tu) * tv.dot(tv) - tu.dot(tv) * tu.dot(tv);
    const GramianData g = gramian(s, ComplexParamPoint::real(y), p, u);
    CHECK(std::abs(g.det - det) / det < 1e-8);
    CHECK(std::abs(g.matrix(0, 1) - tu.dot(tv)) < 1e-8);
    CHECK(std::abs(g.det.imag()) <= 1e-14);
    CHECK(g.sqrt_det.real() > 0);
  }
}

TEST_CASE("normals: flat chart, north pole, unit length") {
  ParametricSurface flat({flat_chart(0, Rect{-1, 1, -1, 1})}, AffineMap{}, {});
  const CVec3 nf = normal(flat, ComplexParamPoint::real({}), 0, Vec2(0.3, 0.3));
  CHECK((nf.real() - Vec3(0, 0, 1)).norm() < 1e-15);

  const ParametricSurface s = surface_from_json({{"reference", "sphere"}});
  int north = -1;
  for (int p = 0; p < 6; ++p) {
    if (s.patch(p).point(Vec2(0, 0)).z() > 0.99) north = p;
  }
  REQUIRE(north >= 0);
  const CVec3 n = normal(s, ComplexParamPoint::real({}), north, Vec2(0, 0));
  CHECK((n.real() - Vec3(0, 0, 1)).norm() < 1e-12);

  const ParametricSurface d = surface_from_json(sphere_spec(0.2));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u11(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const int p = k % 6;
    const Vec2 u(u11(rng), u11(rng));
    const std::vector<double> y{u11(rng), u11(rng), u11(rng), u11(rng)};
    const CVec3 m = normal(d, ComplexParamPoint::real(y), p, u);
    CHECK(std::abs(m.real().norm() - 1.0) < 1e-14);
    CHECK(imag_norm(m) <= 1e-14);
    const Vec3 x = eval_surface(d, ComplexParamPoint::real(y), p, u).real();
    CHECK(m.real().dot(x) > 0);
  }
}

TEST_CASE("finite-difference charts match analytic ones") {
  const auto charts = cube_sphere_charts();
  const PatchChart& a = charts[2];
  const PatchChart fd = PatchChart::from_point_map(
      a.id(), a.domain(), [&a](double u, double v) { return a.point(Vec2(u, v)); });
  CHECK_FALSE(fd.analytic());
  const ChartJet ja = a.jet(Vec2(0.4, -0.3));
  const ChartJet jf = fd.jet(Vec2(0.4, -0.3));
  CHECK((ja.xu - jf.xu).norm() < 1e-9);
  CHECK((ja.xv - jf.xv).norm() < 1e-9);
  CHECK_THROWS_AS(a.jet(Vec2(1.5, 0)), DomainError);
}

TEST_CASE("complex parameter admissibility") {
  ComplexParamPoint z({cplx(0.5, 0.2)}, {1.25});
  CHECK(z.admissible());
  CHECK_FALSE(z.is_real());
  ComplexParamPoint far({cplx(0.5, 0.2)}, {1.15});
  CHECK_FALSE(far.admissible());
  CHECK_THROWS_AS(far.check_admissible(), InadmissibleError);
  const ParametricSurface s = surface_from_json(sphere_spec());
  CHECK_THROWS_AS(eval_surface(s, far, 0, Vec2(0, 0)), InadmissibleError);
  CHECK(ComplexParamPoint::real({0.3, -1.0}).is_real());
  CHECK(in_O(cplx(1.5, 0), 1.5));
  CHECK_FALSE(in_O(cplx(1.5, 0.1), 1.5));
}

TEST_CASE("gramian stays positive on complex parameters near the real box") {
  const ParametricSurface s = surface_from_json(sphere_spec());
  const std::vector<double> rho = polyradius_for_epsilon(s, 0.05);
  const GramianBounds b = gramian_bounds(s, rho, 10000);
  CHECK(b.violations == 0);
  CHECK(b.zeta_min > 0);
  CHECK(b.zeta_max >= b.zeta_min);
}

TEST_CASE("lipschitz margin") {
  ParametricSurface flat({flat_chart(0, Rect{-1, 1, -1, 1})}, AffineMap{}, {});
  CHECK(std::abs(lipschitz_margin(flat, {}, 50) - 1.0) < 1e-12);
  const ParametricSurface s = surface_from_json(sphere_spec());
  CHECK(lipschitz_margin(s, {1, 1, 1, 1}, 200) > 0);
  CHECK_THROWS_AS(lipschitz_margin(s, {1, 1, 1, 1}, 1), DomainError);
}

TEST_CASE("admissible epsilon estimate backs off from failure") {
  const ParametricSurface s = surface_from_json(sphere_spec(0.3));
  const EpsilonEstimate e = estimate_admissible_epsilon(s, 200);
  CHECK(e.epsilon > 0);
  CHECK(e.failing_epsilon > e.epsilon);
  CHECK(e.eta_hat > 0);
}

TEST_CASE("bernstein ellipse samples") {
  const EllipseSample e = bernstein_ellipse_sample(2.0, 64);
  CHECK(e.semi_major == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(e.semi_minor == doctest::Approx(0.75).epsilon(1e-15));
  for (cplx z : e.points) {
    CHECK(in_O(z, 2.0));
    CHECK(in_bernstein_ellipse(z, 2.0, 1e-12));
    const double q = std::pow(z.real() / 1.25, 2) + std::pow(z.imag() / 0.75, 2);
    CHECK(std::abs(q - 1) < 1e-12);
  }
  const EllipseSample thin = bernstein_ellipse_sample(1 + 1e-9, 16);
  for (cplx z : thin.points) CHECK(dist_to_interval(z) < 1e-8);
  CHECK_THROWS_AS(bernstein_ellipse_sample(1.0, 8), DomainError);
}

TEST_CASE("surface JSON errors") {
  CHECK_THROWS_AS(surface_from_json({{"reference", "torus"}}), DomainError);
  CHECK_THROWS_AS(surface_from_json({{"reference", "sphere"}, {"p", 1.5}}), DomainError);
  const ParametricSurface s = surface_from_json(sphere_spec());
  CHECK(s.truncation() == 4);
  for (double b : s.b_seq()) CHECK(b > 0);
  CHECK(s.b_seq()[0] > s.b_seq()[3]);
}
