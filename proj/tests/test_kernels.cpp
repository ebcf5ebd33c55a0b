#include <doctest.h>

#include <cmath>
#include <random>

#include "parabem/error.hpp"
#include "parabem/kernels.hpp"

using namespace parabem;

namespace {

constexpr cplx I(0, 1);

cplx green(double kappa, const Vec3& v) {
  const double r = v.norm();
  return std::exp(I * kappa * r) / (4 * kPi * r);
}

WaveContext ctx_with(double kappa) {
  WaveContext c;
  c.kappa = kappa;
  return c;
}

}  // namespace

TEST_CASE("complex norm") {
  CHECK(complex_norm(CVec3(1, 0, 0)) == cplx(1, 0));
  CHECK(std::abs(complex_norm(CVec3(3, 4, 0)) - 5.0) < 1e-15);
  CHECK_THROWS_AS(complex_norm(CVec3(I, 0, 0)), InadmissibleError);
  const CVec3 v(cplx(1, 0.2), cplx(0.5, -0.1), cplx(0, 0.3));
  const cplx r = complex_norm(v);
  CHECK(std::abs(r * r - (v.transpose() * v).value()) < 1e-15);
  CHECK(r.real() > 0);
}

TEST_CASE("single layer kernel") {
  CHECK(std::abs(slp_kernel(ctx_with(0), CVec3(1, 0, 0)) - 1 / (4 * kPi)) < 1e-16);
  CHECK(std::abs(slp_kernel(ctx_with(2), CVec3(0, 1, 0)) - std::exp(2.0 * I) / (4 * kPi)) <
        1e-16);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  const WaveContext ctx = ctx_with(1.5);
  for (int k = 0; k < 200; ++k) {
    const Vec3 re(u(rng), u(rng), u(rng));
    const CVec3 v = re.cast<cplx>() + 0.2 * I * Vec3(u(rng), u(rng), u(rng)).cast<cplx>();
    const cplx vv = (v.transpose() * v).value();
    if (vv.real() <= 0.05) continue;
    const double mag = std::sqrt(v.squaredNorm());
    const cplx a = slp_kernel(ctx, v);
    CHECK(std::abs(a) <= std::exp(ctx.kappa * mag) / (4 * kPi * std::abs(complex_norm(v))) + 1e-14);
    CHECK(std::abs(a - slp_kernel(ctx, CVec3(-v))) == 0.0);
    CHECK(std::abs(a * complex_norm(v)) <= std::exp(ctx.kappa * mag) / (4 * kPi) + 1e-14);
  }
  CHECK_THROWS_AS(slp_kernel(ctx, CVec3(I, 0, 0)), InadmissibleError);
}

TEST_CASE("double layer kernel") {
  const WaveContext c0 = ctx_with(0);
  CHECK(dlp_kernel(c0, CVec3(0, 0, 1), CVec3(1, 0, 0)) == cplx(0, 0));
  CHECK(std::abs(dlp_kernel(c0, CVec3(1, 0, 0), CVec3(1, 0, 0)) + 1 / (4 * kPi)) < 1e-16);
  CHECK(std::abs(adjoint_dlp_kernel(c0, CVec3(1, 0, 0), CVec3(1, 0, 0)) + 1 / (4 * kPi)) <
        1e-16);
  // On a plane the normal is orthogonal to every difference vector.
  const WaveContext c = ctx_with(2);
  CHECK(dlp_kernel(c, CVec3(0, 0, 1), CVec3(0.3, -0.2, 0)) == cplx(0, 0));
  CHECK(adjoint_dlp_kernel(c, CVec3(0, 0, 1), CVec3(-0.1, 0.7, 0)) == cplx(0, 0));
}

TEST_CASE("layer kernels are normal derivatives of the fundamental solution") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const double kappa = 1.7;
  const WaveContext ctx = ctx_with(kappa);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 y(u(rng) + 2, u(rng), u(rng));
    const Vec3 nx = Vec3(u(rng), u(rng), u(rng)).normalized();
    const Vec3 ny = Vec3(u(rng), u(rng), u(rng)).normalized();
    // d/dn_y G(x - y)
    const cplx fd_y = (green(kappa, x - (y + h * ny)) - green(kappa, x - (y - h * ny))) / (2 * h);
    const cplx dlp = dlp_kernel(ctx, ny.cast<cplx>(), (y - x).cast<cplx>());
    CHECK(std::abs(dlp - fd_y) < 1e-8 * std::max(1.0, std::abs(fd_y)));
    // d/dn_x G(x - y)
    const cplx fd_x = (green(kappa, (x + h * nx) - y) - green(kappa, (x - h * nx) - y)) / (2 * h);
    const cplx adj = adjoint_dlp_kernel(ctx, nx.cast<cplx>(), (x - y).cast<cplx>());
    CHECK(std::abs(adj - fd_x) < 1e-8 * std::max(1.0, std::abs(fd_x)));
  }
}

TEST_CASE("incident plane wave traces") {
  WaveContext ctx = ctx_with(2.5);
  const IncidentTrace t0 = incident_trace(ctx, CVec3(0, 0, 0), CVec3(1, 0, 0));
  CHECK(std::abs(t0.dirichlet - 1.0) < 1e-16);
  const ParametricSurface s = surface_from_json(
      {{"reference", "sphere"}, {"modes", {{"count", 2}, {"amplitude", 0.2}}}});
  for (int p = 0; p < 6; ++p) {
    const Vec2 u(0.1 * p - 0.3, 0.2);
    const IncidentTrace t = incident_trace(ctx, s, {0.4, -0.6}, p, u);
    CHECK(std::abs(std::abs(t.dirichlet) - 1.0) < 1e-14);
    const CVec3 n = normal(s, ComplexParamPoint::real({0.4, -0.6}), p, u);
    const cplx ratio = t.neumann / t.dirichlet;
    CHECK(std::abs(ratio - I * ctx.kappa * n.real().dot(ctx.d_inc)) < 1e-13);
  }
}

TEST_CASE("wave context validation") {
  WaveContext c;
  CHECK_NOTHROW(c.validate());
  c.kappa = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.kappa = 1;
  c.eta = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.eta = 1;
  c.d_inc = Vec3(1, 1, 0);
  CHECK_THROWS_AS(c.validate(), DomainError);
  const WaveContext w = wave_from_json({{"kappa", 2.0}, {"eta", 1.5}, {"d_inc", {1, 0, 0}}});
  CHECK(w.kappa == 2.0);
  CHECK(w.eta == 1.5);
  CHECK(w.d_inc == Vec3(1, 0, 0));
}
