#include "parabem/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "parabem/error.hpp"
#include "parabem/jet.hpp"
#include "parabem/rng.hpp"

namespace parabem {

PatchChart::PatchChart(int id, Rect domain, JetFn jet)
    : id_(id), domain_(domain), jet_(std::move(jet)) {
  if (!(domain_.width() > 0 && domain_.height() > 0)) {
    throw DomainError("patch chart domain must have positive extent");
  }
}

PatchChart PatchChart::from_point_map(int id, Rect domain, PointFn map,
                                      double step) {
  // First derivatives: 4th-order central differences at `step`. Second
  // derivatives use a wider step, since they only feed the normal derivative.
  const double h2 = 1e-3;
  auto jet = [map, step, h2](double u, double v) {
    auto d1 = [&](double h, auto f) {
      return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
    };
    ChartJet c;
    c.x = map(u, v);
    c.xu = d1(step, [&](double t) { return Vec3(map(u + t, v)); });
    c.xv = d1(step, [&](double t) { return Vec3(map(u, v + t)); });
    auto d2 = [&](auto f) {
      return (-f(2 * h2) + 16.0 * f(h2) - 30.0 * f(0.0) + 16.0 * f(-h2) -
              f(-2 * h2)) /
             (12.0 * h2 * h2);
    };
    c.xuu = d2([&](double t) { return Vec3(map(u + t, v)); });
    c.xvv = d2([&](double t) { return Vec3(map(u, v + t)); });
    c.xuv = d1(h2, [&](double t) {
      return Vec3(d1(h2, [&](double s) { return Vec3(map(u + s, v + t)); }));
    });
    return c;
  };
  PatchChart chart(id, domain, jet);
  chart.analytic_ = false;
  return chart;
}

ChartJet PatchChart::jet(const Vec2& u) const {
  if (!domain_.contains(u)) {
    std::ostringstream os;
    os << "point (" << u(0) << ", " << u(1) << ") outside domain of patch "
       << id_;
    throw DomainError(os.str());
  }
  return jet_(u(0), u(1));
}

namespace {

ChartJet to_chart_jet(const std::array<Jet2, 3>& p) {
  ChartJet c;
  for (int k = 0; k < 3; ++k) {
    c.x(k) = p[k].v;
    c.xu(k) = p[k].du;
    c.xv(k) = p[k].dv;
    c.xuu(k) = p[k].duu;
    c.xuv(k) = p[k].duv;
    c.xvv(k) = p[k].dvv;
  }
  return c;
}

struct FaceFrame {
  Vec3 a, b, c;  // a x b = c, c the outward face axis
};

const std::array<FaceFrame, 6>& cube_frames() {
  static const std::array<FaceFrame, 6> frames = {{
      {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}},
      {{0, 0, 1}, {0, 1, 0}, {-1, 0, 0}},
      {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
      {{1, 0, 0}, {0, 0, 1}, {0, -1, 0}},
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},
  }};
  return frames;
}

template <class T>
std::array<T, 3> cube_sphere_point(const FaceFrame& f, const T& u, const T& v,
                                   double radius) {
  const T xi = tan(T(kPi / 4) * u);
  const T eta = tan(T(kPi / 4) * v);
  std::array<T, 3> p;
  for (int k = 0; k < 3; ++k) p[k] = T(f.c(k)) + f.a(k) * xi + f.b(k) * eta;
  const T norm = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  for (auto& pk : p) pk = radius * (pk / norm);
  return p;
}

}  // namespace

std::vector<PatchChart> cube_sphere_charts(double radius) {
  std::vector<PatchChart> out;
  for (int f = 0; f < 6; ++f) {
    const FaceFrame frame = cube_frames()[f];
    out.emplace_back(f, Rect{-1, 1, -1, 1}, [frame, radius](double u, double v) {
      return to_chart_jet(cube_sphere_point(frame, Jet2::var_u(u),
                                            Jet2::var_v(v), radius));
    });
  }
  return out;
}

std::vector<PatchChart> box_charts(double half_width) {
  std::vector<PatchChart> out;
  for (int f = 0; f < 6; ++f) {
    const FaceFrame fr = cube_frames()[f];
    out.emplace_back(f, Rect{-1, 1, -1, 1}, [fr, half_width](double u, double v) {
      ChartJet c;
      c.x = half_width * (fr.c + u * fr.a + v * fr.b);
      c.xu = half_width * fr.a;
      c.xv = half_width * fr.b;
      c.xuu = c.xuv = c.xvv = Vec3::Zero();
      return c;
    });
  }
  return out;
}

PatchChart flat_chart(int id, Rect domain, double scale) {
  return PatchChart(id, domain, [scale](double u, double v) {
    ChartJet c;
    c.x = Vec3(scale * u, scale * v, 0);
    c.xu = Vec3(scale, 0, 0);
    c.xv = Vec3(0, scale, 0);
    c.xuu = c.xuv = c.xvv = Vec3::Zero();
    return c;
  });
}

ReferenceJet reference_jet(const ChartJet& c) {
  ReferenceJet r;
  r.x = c.x;
  r.xu = c.xu;
  r.xv = c.xv;
  const Vec3 m = c.xu.cross(c.xv);
  const double mn = m.norm();
  r.n = m / mn;
  const Vec3 mu = c.xuu.cross(c.xv) + c.xu.cross(c.xuv);
  const Vec3 mv = c.xuv.cross(c.xv) + c.xu.cross(c.xvv);
  r.nu = (mu - r.n * r.n.dot(mu)) / mn;
  r.nv = (mv - r.n * r.n.dot(mv)) / mn;
  return r;
}

Mode Mode::constant(const Vec3& c) {
  return Mode([c](const ReferenceJet&) {
    ModeJet m;
    m.value = c;
    return m;
  });
}

Mode Mode::normal_bump(double amplitude, const Vec3& center, double radius) {
  return Mode([amplitude, center, radius](const ReferenceJet& r) {
    ModeJet m;
    const Vec3 d = r.x - center;
    const double s = d.squaredNorm() / (radius * radius);
    if (s >= 1.0) return m;
    const double one_minus = 1.0 - s;
    const double beta = one_minus * one_minus * one_minus;
    const double beta_s = -3.0 * one_minus * one_minus;
    const double su = 2.0 * d.dot(r.xu) / (radius * radius);
    const double sv = 2.0 * d.dot(r.xv) / (radius * radius);
    m.value = amplitude * beta * r.n;
    m.du = amplitude * (beta_s * su * r.n + beta * r.nu);
    m.dv = amplitude * (beta_s * sv * r.n + beta * r.nv);
    return m;
  });
}

namespace {

double mode_lipschitz_norm(const std::vector<PatchChart>& patches,
                           const Mode& mode) {
  constexpr int kGrid = 16;
  double sup = 0, lip = 0;
  for (const auto& chart : patches) {
    const Rect& d = chart.domain();
    for (int a = 0; a < kGrid; ++a) {
      for (int b = 0; b < kGrid; ++b) {
        const Vec2 u(d.u0 + (a + 0.5) * d.width() / kGrid,
                     d.v0 + (b + 0.5) * d.height() / kGrid);
        const ReferenceJet r = reference_jet(chart.jet_unchecked(u));
        const ModeJet m = mode(r);
        sup = std::max(sup, m.value.norm());
        Eigen::Matrix<double, 3, 2> dchi, dphi;
        dchi << r.xu, r.xv;
        dphi << m.du, m.dv;
        const Eigen::Matrix3d surf_grad =
            dphi * (dchi.transpose() * dchi).inverse() * dchi.transpose();
        const double op_norm =
            std::sqrt(std::max(0.0, (surf_grad.transpose() * surf_grad)
                                        .selfadjointView<Eigen::Lower>()
                                        .eigenvalues()
                                        .maxCoeff()));
        lip = std::max(lip, op_norm);
      }
    }
  }
  return sup + lip;
}

struct RawSurfacePoint {
  Vec3 ref;
  CVec3 x, tu, tv;
  cplx g;
};

RawSurfacePoint evaluate_raw(const ParametricSurface& s, const ChartJet& c,
                             std::span<const cplx> z) {
  const auto& phi0 = s.phi0();
  RawSurfacePoint p;
  p.ref = c.x;
  p.x = (phi0.A * c.x + phi0.t).cast<cplx>();
  p.tu = (phi0.A * c.xu).cast<cplx>();
  p.tv = (phi0.A * c.xv).cast<cplx>();
  const std::size_t active = std::min(z.size(), s.truncation());
  bool any = false;
  for (std::size_t j = 0; j < active; ++j) any = any || z[j] != cplx{};
  if (any) {
    const ReferenceJet r = reference_jet(c);
    for (std::size_t j = 0; j < active; ++j) {
      if (z[j] == cplx{}) continue;
      const ModeJet m = s.modes()[j](r);
      p.x += z[j] * m.value.cast<cplx>();
      p.tu += z[j] * m.du.cast<cplx>();
      p.tv += z[j] * m.dv.cast<cplx>();
    }
  }
  const cplx guu = bdot(p.tu, p.tu), guv = bdot(p.tu, p.tv),
             gvv = bdot(p.tv, p.tv);
  p.g = guu * gvv - guv * guv;
  return p;
}

}  // namespace

ParametricSurface::ParametricSurface(std::vector<PatchChart> patches,
                                     AffineMap phi0, std::vector<Mode> modes,
                                     double p)
    : patches_(std::move(patches)),
      phi0_(std::move(phi0)),
      modes_(std::move(modes)),
      p_(p) {
  if (patches_.empty()) throw DomainError("surface needs at least one patch");
  for (std::size_t k = 0; k < patches_.size(); ++k) {
    if (patches_[k].id() != static_cast<int>(k)) {
      throw DomainError("patch ids must be 0..n-1 in order");
    }
  }
  if (!(p_ > 0 && p_ < 1)) throw DomainError("p must lie in (0,1)");
  b_.reserve(modes_.size());
  for (const auto& m : modes_) b_.push_back(mode_lipschitz_norm(patches_, m));
}

const PatchChart& ParametricSurface::patch(int id) const {
  if (id < 0 || id >= static_cast<int>(patches_.size())) {
    throw DomainError("unknown patch id " + std::to_string(id));
  }
  return patches_[static_cast<std::size_t>(id)];
}

SurfacePoint ParametricSurface::evaluate(int patch_id, const Vec2& u,
                                         std::span<const cplx> z) const {
  return evaluate(patch_id, u, z, patch(patch_id).jet(u));
}

SurfacePoint ParametricSurface::evaluate(int /*patch_id*/, const Vec2& /*u*/,
                                         std::span<const cplx> z,
                                         const ChartJet& chart) const {
  const RawSurfacePoint raw = evaluate_raw(*this, chart, z);
  if (!(raw.g.real() > 0)) {
    std::ostringstream os;
    os << "Re(g) = " << raw.g.real() << " <= 0: inadmissible deformation";
    throw InadmissibleError(os.str());
  }
  SurfacePoint p;
  p.ref = raw.ref;
  p.x = raw.x;
  p.tu = raw.tu;
  p.tv = raw.tv;
  p.g = raw.g;
  p.sqrt_g = std::sqrt(raw.g);
  p.normal = cross(raw.tu, raw.tv) / p.sqrt_g;
  return p;
}

PreparedPoint ParametricSurface::prepare(const ChartJet& c) const {
  PreparedPoint pp;
  pp.ref = c.x;
  pp.x = phi0_.A * c.x + phi0_.t;
  pp.xu = phi0_.A * c.xu;
  pp.xv = phi0_.A * c.xv;
  if (!modes_.empty()) {
    const ReferenceJet r = reference_jet(c);
    pp.modes.reserve(modes_.size());
    for (const auto& m : modes_) pp.modes.push_back(m(r));
  }
  return pp;
}

SurfacePoint ParametricSurface::evaluate(const PreparedPoint& pp,
                                         std::span<const cplx> z) const {
  SurfacePoint p;
  p.ref = pp.ref;
  // Modes are real, so the real and imaginary parts accumulate separately.
  Vec3 xr = pp.x, tur = pp.xu, tvr = pp.xv;
  Vec3 xi = Vec3::Zero(), tui = Vec3::Zero(), tvi = Vec3::Zero();
  const std::size_t active = std::min(z.size(), pp.modes.size());
  for (std::size_t j = 0; j < active; ++j) {
    const double a = z[j].real(), b = z[j].imag();
    const ModeJet& m = pp.modes[j];
    if (a != 0) {
      xr += a * m.value;
      tur += a * m.du;
      tvr += a * m.dv;
    }
    if (b != 0) {
      xi += b * m.value;
      tui += b * m.du;
      tvi += b * m.dv;
    }
  }
  for (int k = 0; k < 3; ++k) {
    p.x(k) = {xr(k), xi(k)};
    p.tu(k) = {tur(k), tui(k)};
    p.tv(k) = {tvr(k), tvi(k)};
  }
  const cplx guu = bdot(p.tu, p.tu), guv = bdot(p.tu, p.tv),
             gvv = bdot(p.tv, p.tv);
  p.g = guu * gvv - guv * guv;
  if (!(p.g.real() > 0)) {
    std::ostringstream os;
    os << "Re(g) = " << p.g.real() << " <= 0: inadmissible deformation";
    throw InadmissibleError(os.str());
  }
  p.sqrt_g = std::sqrt(p.g);
  p.normal = cross(p.tu, p.tv) / p.sqrt_g;
  return p;
}

double dist_to_interval(cplx z) {
  const double x = z.real(), y = z.imag();
  const double dx = x < -1 ? -1 - x : (x > 1 ? x - 1 : 0.0);
  return std::hypot(dx, y);
}

bool in_O(cplx z, double rho, double tol) {
  return dist_to_interval(z) <= rho - 1 + tol;
}

bool in_bernstein_ellipse(cplx z, double s, double tol) {
  if (s <= 1) return std::abs(z.imag()) <= tol && std::abs(z.real()) <= 1 + tol;
  const double a = 0.5 * (s + 1 / s), b = 0.5 * (s - 1 / s);
  const double q = (z.real() / a) * (z.real() / a) + (z.imag() / b) * (z.imag() / b);
  return q <= 1 + tol;
}

ComplexParamPoint::ComplexParamPoint(std::vector<cplx> z,
                                     std::vector<double> rho)
    : values(std::move(z)), polyradius(std::move(rho)) {
  if (polyradius.size() != values.size()) {
    throw DomainError("polyradius length must match parameter length");
  }
  for (double r : polyradius) {
    if (!(r >= 1)) throw DomainError("polyradius entries must be >= 1");
  }
}

ComplexParamPoint ComplexParamPoint::real(const std::vector<double>& y) {
  std::vector<cplx> z(y.begin(), y.end());
  return {std::move(z), std::vector<double>(y.size(), 1.0)};
}

bool ComplexParamPoint::is_real() const {
  return std::all_of(values.begin(), values.end(), [](cplx v) {
    return v.imag() == 0 && std::abs(v.real()) <= 1;
  });
}

bool ComplexParamPoint::admissible() const {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!in_O(values[j], polyradius[j])) return false;
  }
  return true;
}

void ComplexParamPoint::check_admissible() const {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!in_O(values[j], polyradius[j])) {
      std::ostringstream os;
      os << "z_" << j + 1 << " = " << values[j] << " outside O_rho with rho = "
         << polyradius[j];
      throw InadmissibleError(os.str());
    }
  }
}

ComplexParamPoint ComplexParamPoint::conj() const {
  ComplexParamPoint c = *this;
  for (auto& v : c.values) v = std::conj(v);
  return c;
}

CVec3 eval_surface(const ParametricSurface& surface,
                   const ComplexParamPoint& z, int patch, const Vec2& u) {
  z.check_admissible();
  const ChartJet c = surface.patch(patch).jet(u);
  return evaluate_raw(surface, c, z.values).x;
}

GramianData gramian(const ParametricSurface& surface,
                    const ComplexParamPoint& z, int patch, const Vec2& u) {
  z.check_admissible();
  const ChartJet c = surface.patch(patch).jet(u);
  const RawSurfacePoint p = evaluate_raw(surface, c, z.values);
  GramianData out;
  out.matrix << bdot(p.tu, p.tu), bdot(p.tu, p.tv), bdot(p.tv, p.tu),
      bdot(p.tv, p.tv);
  out.det = p.g;
  if (!(p.g.real() > 0)) {
    std::ostringstream os;
    os << "Re(g) = " << p.g.real() << " <= 0: inadmissible deformation";
    throw InadmissibleError(os.str());
  }
  out.sqrt_det = std::sqrt(p.g);
  return out;
}

CVec3 normal(const ParametricSurface& surface, const ComplexParamPoint& z,
             int patch, const Vec2& u) {
  z.check_admissible();
  const SurfacePoint p = surface.evaluate(patch, u, z.values);
  if (std::abs(p.sqrt_g) < 1e-14) {
    throw InadmissibleError("degenerate surface element: sqrt(g) ~ 0");
  }
  return p.normal;
}

namespace {

struct RefSample {
  int patch;
  Vec2 u;
};

RefSample random_ref_point(const ParametricSurface& s, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(s.num_patches()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int p = pick(rng);
  const Rect& d = s.patch(p).domain();
  return {p, Vec2(d.u0 + unit(rng) * d.width(), d.v0 + unit(rng) * d.height())};
}

std::vector<cplx> random_point_in_O(const std::vector<double>& rho,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<cplx> z(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const double base = 2 * unit(rng) - 1;
    // Half of the samples sit on the outer boundary of O_rho.
    const double r = (unit(rng) < 0.5 ? 1.0 : unit(rng)) * (rho[j] - 1);
    const double angle = 2 * kPi * unit(rng);
    cplx v = base + r * std::polar(1.0, angle);
    if (!in_O(v, rho[j])) v = base;  // guard against roundoff at the rim
    z[j] = v;
  }
  return z;
}

}  // namespace

double lipschitz_margin(const ParametricSurface& surface,
                        const std::vector<double>& polyradius,
                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw DomainError("lipschitz_margin needs >= 2 samples");
  auto rng = make_stream(seed, "lipschitz-margin");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const RefSample a = random_ref_point(surface, rng);
    RefSample b = random_ref_point(surface, rng);
    if (unit(rng) < 0.5) {
      // Close pairs on the same patch probe the local (derivative) ratio.
      const Rect& d = surface.patch(a.patch).domain();
      const double scale =
          std::min(d.width(), d.height()) * std::pow(10.0, -3.0 * unit(rng));
      const double ang = 2 * kPi * unit(rng);
      Vec2 u = a.u + scale * Vec2(std::cos(ang), std::sin(ang));
      u(0) = std::clamp(u(0), d.u0, d.u1);
      u(1) = std::clamp(u(1), d.v0, d.v1);
      b = {a.patch, u};
    }
    const std::vector<cplx> z = random_point_in_O(polyradius, rng);
    const ChartJet ca = surface.patch(a.patch).jet_unchecked(a.u);
    const ChartJet cb = surface.patch(b.patch).jet_unchecked(b.u);
    const double den = (ca.x - cb.x).squaredNorm();
    if (den < 1e-24) continue;
    const CVec3 diff =
        evaluate_raw(surface, ca, z).x - evaluate_raw(surface, cb, z).x;
    margin = std::min(margin, bdot(diff, diff).real() / den);
  }
  return margin;
}

GramianBounds gramian_bounds(const ParametricSurface& surface,
                             const std::vector<double>& polyradius,
                             std::size_t n_samples, std::uint64_t seed) {
  auto rng = make_stream(seed, "gramian-bounds");
  GramianBounds out;
  out.zeta_min = std::numeric_limits<double>::infinity();
  out.zeta_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const RefSample a = random_ref_point(surface, rng);
    const std::vector<cplx> z = random_point_in_O(polyradius, rng);
    const double re_g =
        evaluate_raw(surface, surface.patch(a.patch).jet_unchecked(a.u), z)
            .g.real();
    out.zeta_min = std::min(out.zeta_min, re_g);
    out.zeta_max = std::max(out.zeta_max, re_g);
    if (!(re_g > 0)) ++out.violations;
  }
  return out;
}

EllipseSample bernstein_ellipse_sample(double s, std::size_t n) {
  if (!(s > 1)) throw DomainError("Bernstein ellipse parameter must exceed 1");
  EllipseSample out;
  out.semi_major = 0.5 * (s + 1 / s);
  out.semi_minor = 0.5 * (s - 1 / s);
  out.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx w = std::polar(s, 2 * kPi * static_cast<double>(k) /
                                     static_cast<double>(n));
    out.points.push_back(0.5 * (w + 1.0 / w));
  }
  return out;
}

std::vector<double> polyradius_for_epsilon(const ParametricSurface& surface,
                                           double eps) {
  const auto& b = surface.b_seq();
  const double s = static_cast<double>(std::max<std::size_t>(b.size(), 1));
  std::vector<double> rho(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    // Modes with vanishing norm do not constrain the region; cap them.
    rho[j] = 1 + std::min(eps / (s * std::max(b[j], 1e-300)), 1e6);
  }
  return rho;
}

EpsilonEstimate estimate_admissible_epsilon(const ParametricSurface& surface,
                                            std::size_t n_samples,
                                            std::uint64_t seed) {
  auto passes = [&](double eps) {
    const auto rho = polyradius_for_epsilon(surface, eps);
    if (lipschitz_margin(surface, rho, n_samples, seed) <= 0) return false;
    return gramian_bounds(surface, rho, n_samples, seed).violations == 0;
  };
  double lo = 0, hi = 1e-2;
  while (passes(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > 1e4) break;
  }
  for (int it = 0; it < 8 && lo > 0; ++it) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  EpsilonEstimate out;
  out.failing_epsilon = hi;
  out.epsilon = 0.5 * (lo > 0 ? lo : hi / 2);
  out.polyradius = polyradius_for_epsilon(surface, out.epsilon);
  out.eta_hat = lipschitz_margin(surface, out.polyradius, n_samples, seed);
  out.zeta = gramian_bounds(surface, out.polyradius, n_samples, seed);
  return out;
}

namespace {

double json_number(const nlohmann::json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

Vec3 json_vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw DomainError("expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

ParametricSurface surface_from_json(const nlohmann::json& spec) {
  const std::string reference = spec.value("reference", std::string("sphere"));
  const double radius = json_number(spec, "radius", 1.0);
  std::vector<PatchChart> patches;
  if (reference == "sphere") {
    patches = cube_sphere_charts(radius);
  } else if (reference == "box") {
    patches = box_charts(radius);
  } else if (reference == "flat") {
    patches.push_back(flat_chart(0, Rect{-1, 1, -1, 1}, radius));
  } else {
    throw DomainError("unknown reference surface '" + reference + "'");
  }

  AffineMap phi0;
  if (spec.contains("phi0")) {
    const auto& p = spec.at("phi0");
    phi0.A *= json_number(p, "scale", 1.0);
    if (p.contains("shift")) phi0.t = json_vec3(p.at("shift"));
  }

  std::vector<Mode> modes;
  double theta = 2.0;
  if (spec.contains("modes")) {
    const auto& m = spec.at("modes");
    const int count = m.value("count", 0);
    theta = json_number(m, "theta", 2.0);
    const double amp = json_number(m, "amplitude", 0.1);
    const double bump_radius = json_number(m, "bump_radius", 1.0);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      Vec3 center;
      if (m.contains("centers")) {
        center = json_vec3(m.at("centers").at(static_cast<std::size_t>(j)));
      } else {
        const double zc = 1.0 - 2.0 * (j + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        center = radius * Vec3(r * std::cos(j * golden),
                               r * std::sin(j * golden), zc);
      }
      const double cj = amp * std::pow(static_cast<double>(j + 1), -theta);
      modes.push_back(Mode::normal_bump(cj, center, bump_radius));
    }
  }
  double p = std::clamp(1.0 / theta + 0.05, 0.05, 0.95);
  if (spec.contains("p")) p = spec.at("p").get<double>();
  return ParametricSurface(std::move(patches), phi0, std::move(modes), p);
}

}  // namespace parabem
