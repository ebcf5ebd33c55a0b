#include <doctest.h>

#include <cmath>
#include <functional>

#include "parabem/error.hpp"
#include "parabem/quadrature.hpp"

using namespace parabem;

namespace {

// Integral of 1/r over [0,a] x [0,b] with the singularity at the corner.
double corner_integral(double a, double b) {
  if (a <= 0 || b <= 0) return 0;
  const double d = std::hypot(a, b);
  return a * std::log((b + d) / a) + b * std::log((a + d) / b);
}

// Integral of 1/|u - t| over the rectangle, split at the target.
double rect_inverse_distance(const Rect& r, const Vec2& t) {
  return corner_integral(t(0) - r.u0, t(1) - r.v0) + corner_integral(r.u1 - t(0), t(1) - r.v0) +
         corner_integral(t(0) - r.u0, r.v1 - t(1)) + corner_integral(r.u1 - t(0), r.v1 - t(1));
}

double integrate(const PatchQuadrature& q, const std::function<double(const Vec2&)>& f) {
  double s = 0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * f(q.nodes[k]);
  return s;
}

double legendre_p(int n, double x) {
  double p0 = 1, p1 = x;
  if (n == 0) return p0;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

TEST_CASE("gauss-legendre nodes are roots of the Legendre polynomial") {
  for (int n : {1, 2, 5, 12, 40}) {
    const GaussLegendre& g = gauss_legendre(n);
    REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
    double sum = 0;
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(legendre_p(n, g.nodes[k])) < 1e-13);
      CHECK(g.weights[k] > 0);
      sum += g.weights[k];
    }
    CHECK(std::abs(sum - 2) < 1e-14);
  }
}

TEST_CASE("tensor gauss rule") {
  const PatchQuadrature q1 = gauss_rule(Rect{0, 1, 0, 1}, 1);
  REQUIRE(q1.size() == 1);
  CHECK((q1.nodes[0] - Vec2(0.5, 0.5)).norm() < 1e-16);
  CHECK(std::abs(q1.weights[0] - 1) < 1e-16);

  const PatchQuadrature q2 = gauss_rule(Rect{0, 1, 0, 1}, 2);
  CHECK(q2.size() == 4);
  CHECK(std::abs(integrate(q2, [](const Vec2& u) { return u(0); }) - 0.5) < 1e-15);
  CHECK(std::abs(integrate(q2, [](const Vec2& u) { return std::pow(u(0) * u(1), 3); }) -
                 1.0 / 16) < 1e-15);

  const PatchQuadrature q = gauss_rule(Rect{-1, 2, 0.5, 1}, 6);
  CHECK(std::abs(q.weight_sum() - 1.5) < 1e-14);
  CHECK(q.size() == 36);
  CHECK_THROWS_AS(gauss_rule(Rect{0, 1, 0, 1}, 0), DomainError);
}

TEST_CASE("cutoff profile") {
  CHECK(cutoff(0.0) == 0.0);
  CHECK(cutoff(0.25) == 0.0);
  CHECK(cutoff(0.5) == 0.0);
  CHECK(cutoff(1.0) == 1.0);
  CHECK(cutoff(1.5) == 1.0);
  CHECK(std::abs(cutoff(0.75) - 0.5) < 1e-15);
  for (double t = 0; t < 1.2; t += 0.01) {
    CHECK(cutoff(t) >= 0.0);
    CHECK(cutoff(t) <= 1.0);
  }
  const double h = 1e-8;
  for (double t : {0.5, 1.0}) {
    const double left = (cutoff(t) - cutoff(t - h)) / h;
    const double right = (cutoff(t + h) - cutoff(t)) / h;
    CHECK(std::abs(left - right) < 1e-6);
  }
  for (double t : {0.6, 0.8, 0.95}) {
    const double fd = (cutoff(t + h) - cutoff(t - h)) / (2 * h);
    CHECK(std::abs(fd - cutoff_derivative(t)) < 1e-6);
  }
  CHECK_THROWS_AS(cutoff(-0.1), DomainError);
}

TEST_CASE("duffy self-patch rule integrates 1/r") {
  const Rect unit{0, 1, 0, 1};
  const Vec2 c(0.5, 0.5);
  const PatchQuadrature q = duffy_selfpatch_rule(unit, c, 12);
  const double val = integrate(q, [&c](const Vec2& u) { return 1 / (u - c).norm(); });
  CHECK(std::abs(val - 4 * std::log(1 + std::sqrt(2.0))) < 1e-6);
  CHECK(std::abs(val - 3.52549) < 1e-5);
  for (double w : q.weights) CHECK(w > 0);
  CHECK(std::abs(q.weight_sum() - 1) < 1e-12);

  for (const Vec2& t : {Vec2(0.13, 0.71), Vec2(0.9, 0.05), Vec2(0, 0.4), Vec2(1, 1)}) {
    const PatchQuadrature r = duffy_selfpatch_rule(unit, t, 12);
    const double v = integrate(r, [&t](const Vec2& u) { return 1 / (u - t).norm(); });
    CHECK(std::abs(v - rect_inverse_distance(unit, t)) < 1e-6);
  }
}

TEST_CASE("duffy rule agrees with gauss on smooth integrands") {
  const Rect r{-1, 1, -1, 1};
  auto f = [](const Vec2& u) { return std::exp(u(0)) * std::cos(2 * u(1)) + u(0) * u(1); };
  const double ref = integrate(gauss_rule(r, 20), f);
  const double duffy = integrate(duffy_selfpatch_rule(r, Vec2(0.3, -0.6), 12), f);
  CHECK(std::abs(duffy - ref) < 1e-10);
}

TEST_CASE("regularized mass defect decays like n^(nu-2)") {
  // Integral over a flat patch of (1 - cutoff(n r)) / r around its center.
  const PatchChart chart = flat_chart(0, Rect{-1, 1, -1, 1});
  std::vector<double> xs, ys;
  for (int n : {2, 4, 8, 16, 32}) {
    SingularRuleOptions opts;
    opts.breaks = {0.5 / n, 1.0 / n};
    const PatchQuadrature q = singular_rule(chart, Vec2(0, 0), opts).flatten();
    const double m = integrate(q, [n](const Vec2& u) {
      const double r = u.norm();
      return (1 - cutoff(n * r)) / r;
    });
    // Exact value for a disk-shaped support: 2 pi / n * (1/2 + int_{1/2}^1 (1 - phi)).
    CHECK(std::abs(m - 2 * kPi / n * 0.75) < 1e-8);
    xs.push_back(std::log(n));
    ys.push_back(std::log(m));
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k] / xs.size();
    my += ys[k] / ys.size();
  }
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  CHECK(std::abs(sxy / sxx - (-1.0)) < 0.3);
}

TEST_CASE("near rule resolves a close off-patch singularity") {
  const PatchChart chart = flat_chart(0, Rect{0, 1, 0, 1});
  const Vec3 target(0.4, 0.55, 0.02);
  const PatchQuadrature q = near_rule(chart, target).flatten();
  auto f = [&target](const Vec2& u) { return 1 / (Vec3(u(0), u(1), 0) - target).norm(); };
  // Brute-force reference on a fine composite grid.
  double ref = 0;
  const int cells = 200;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const Rect c{double(i) / cells, double(i + 1) / cells, double(j) / cells,
                   double(j + 1) / cells};
      ref += integrate(gauss_rule(c, 8), f);
    }
  }
  CHECK(std::abs(integrate(q, f) - ref) < 1e-8 * ref);
  CHECK(is_far_patch(chart, Vec3(0.5, 0.5, 5), 1.5));
  CHECK_FALSE(is_far_patch(chart, target, 1.5));
  CHECK(cell_order_for(0.1, 1.0, 1e-10, 16) <= cell_order_for(0.5, 1.0, 1e-10, 16));
}

TEST_CASE("lagrange basis") {
  const GaussLegendre& g = gauss_legendre(6);
  const LagrangeBasis b(g.nodes);
  std::vector<double> l(b.size());
  for (double x : {-0.9, -0.2, 0.33, 0.75}) {
    b.eval(x, l.data());
    double sum = 0, p = 0;
    for (std::size_t k = 0; k < l.size(); ++k) {
      sum += l[k];
      p += l[k] * std::pow(g.nodes[k], 5);
    }
    CHECK(std::abs(sum - 1) < 1e-13);
    CHECK(std::abs(p - std::pow(x, 5)) < 1e-13);
  }
  b.eval(g.nodes[2], l.data());
  CHECK(std::abs(l[2] - 1) < 1e-15);
  CHECK(std::abs(l[3]) < 1e-15);
}
