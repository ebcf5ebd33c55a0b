#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/types.hpp"

namespace parabem {

/// Axis-aligned chart domain [u0,u1] x [v0,v1].
struct Rect {
  double u0 = 0, u1 = 1, v0 = 0, v1 = 1;

  double width() const { return u1 - u0; }
  double height() const { return v1 - v0; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (u0 + u1), 0.5 * (v0 + v1)}; }
  bool contains(const Vec2& u, double tol = 1e-12) const {
    return u(0) >= u0 - tol && u(0) <= u1 + tol && u(1) >= v0 - tol &&
           u(1) <= v1 + tol;
  }
};

/// Chart value with first and second derivatives.
struct ChartJet {
  Vec3 x, xu, xv, xuu, xuv, xvv;
};

/// One patch of the reference boundary: chi maps the rectangle into R^3.
class PatchChart {
 public:
  using JetFn = std::function<ChartJet(double u, double v)>;
  using PointFn = std::function<Vec3(double u, double v)>;

  PatchChart(int id, Rect domain, JetFn jet);

  /// Chart given only by its point map; derivatives come from 4th-order
  /// central differences with the given step.
  static PatchChart from_point_map(int id, Rect domain, PointFn map,
                                   double step = 1e-5);

  int id() const { return id_; }
  const Rect& domain() const { return domain_; }
  bool analytic() const { return analytic_; }

  /// Throws DomainError when u is outside the domain.
  ChartJet jet(const Vec2& u) const;
  ChartJet jet_unchecked(const Vec2& u) const { return jet_(u(0), u(1)); }
  Vec3 point(const Vec2& u) const { return jet_(u(0), u(1)).x; }

 private:
  int id_;
  Rect domain_;
  JetFn jet_;
  bool analytic_ = true;
};

/// Six equiangular cube-to-sphere charts on [-1,1]^2, outward oriented.
std::vector<PatchChart> cube_sphere_charts(double radius = 1.0);
/// Six flat faces of the cube [-h,h]^3 on [-1,1]^2, outward oriented.
std::vector<PatchChart> box_charts(double half_width = 1.0);
/// chi(u) = scale * (u, v, 0).
PatchChart flat_chart(int id, Rect domain, double scale = 1.0);

/// Reference point with unit normal and its first derivatives.
struct ReferenceJet {
  Vec3 x, xu, xv;
  Vec3 n, nu, nv;
};

ReferenceJet reference_jet(const ChartJet& c);

struct ModeJet {
  Vec3 value = Vec3::Zero(), du = Vec3::Zero(), dv = Vec3::Zero();
};

/// Real vector field phi_j on the reference boundary, evaluated through the
/// reference jet so that derivatives along the chart are available.
class Mode {
 public:
  using Fn = std::function<ModeJet(const ReferenceJet&)>;

  explicit Mode(Fn fn) : fn_(std::move(fn)) {}
  ModeJet operator()(const ReferenceJet& r) const { return fn_(r); }

  static Mode constant(const Vec3& c);
  /// amplitude * beta(|x - center| / radius) * n(x) with the C^2 profile
  /// beta(t) = (1 - t^2)^3 on t < 1, zero outside.
  static Mode normal_bump(double amplitude, const Vec3& center, double radius);

 private:
  Fn fn_;
};

/// phi_0(x) = A x + t.
struct AffineMap {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Vec3 t = Vec3::Zero();
};

/// 2x2 complex symmetric Gramian of r_z o chi with determinant and its
/// principal square root.
struct GramianData {
  Eigen::Matrix2cd matrix;
  cplx det;
  cplx sqrt_det;
};

/// Deformed surface point with tangents, Gramian and unit normal.
struct SurfacePoint {
  Vec3 ref;  // chi(u) on the reference boundary
  CVec3 x, tu, tv;
  CVec3 normal;
  cplx g;
  cplx sqrt_g;
};

/// Parameter-independent data of one chart point: phi_0 applied to the
/// chart jet and the jets of all modes.
struct PreparedPoint {
  Vec3 ref, x, xu, xv;
  std::vector<ModeJet> modes;
};

/// r_z(x) = phi_0(x) + sum_j z_j phi_j(x) over a patch decomposition of the
/// reference boundary.
class ParametricSurface {
 public:
  ParametricSurface(std::vector<PatchChart> patches, AffineMap phi0,
                    std::vector<Mode> modes, double p = 0.5);

  const std::vector<PatchChart>& patches() const { return patches_; }
  const PatchChart& patch(int id) const;
  std::size_t num_patches() const { return patches_.size(); }
  std::size_t truncation() const { return modes_.size(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const AffineMap& phi0() const { return phi0_; }
  /// Per-mode C^{0,1} norms (sup norm plus sampled surface Lipschitz constant).
  const std::vector<double>& b_seq() const { return b_; }
  double p() const { return p_; }

  /// Evaluates r_z, its tangents, Gramian and normal. Coordinates of z past
  /// the truncation are ignored. Throws InadmissibleError when Re(g) <= 0.
  SurfacePoint evaluate(int patch, const Vec2& u,
                        std::span<const cplx> z) const;
  SurfacePoint evaluate(int patch, const Vec2& u, std::span<const cplx> z,
                        const ChartJet& chart) const;
  PreparedPoint prepare(const ChartJet& chart) const;
  SurfacePoint evaluate(const PreparedPoint& point,
                        std::span<const cplx> z) const;

 private:
  std::vector<PatchChart> patches_;
  AffineMap phi0_;
  std::vector<Mode> modes_;
  std::vector<double> b_;
  double p_;
};

double dist_to_interval(cplx z);
/// dist(z, [-1,1]) <= rho - 1.
bool in_O(cplx z, double rho, double tol = 1e-12);
/// Closed Bernstein ellipse E_s; E_1 is [-1,1].
bool in_bernstein_ellipse(cplx z, double s, double tol = 1e-12);

/// Truncated complex parameter vector with the polyradius it lives in.
struct ComplexParamPoint {
  std::vector<cplx> values;
  std::vector<double> polyradius;

  ComplexParamPoint() = default;
  ComplexParamPoint(std::vector<cplx> z, std::vector<double> rho);
  /// Real point, polyradius 1 per coordinate.
  static ComplexParamPoint real(const std::vector<double>& y);

  std::size_t size() const { return values.size(); }
  cplx operator[](std::size_t j) const {
    return j < values.size() ? values[j] : cplx{};
  }
  bool is_real() const;
  bool admissible() const;
  /// Throws InadmissibleError when some z_j leaves O_{rho_j}.
  void check_admissible() const;
  ComplexParamPoint conj() const;
};

CVec3 eval_surface(const ParametricSurface& surface,
                   const ComplexParamPoint& z, int patch, const Vec2& u);
GramianData gramian(const ParametricSurface& surface,
                    const ComplexParamPoint& z, int patch, const Vec2& u);
CVec3 normal(const ParametricSurface& surface, const ComplexParamPoint& z,
             int patch, const Vec2& u);

/// Sampled minimum of Re{(r_z(x)-r_z(y)).(r_z(x)-r_z(y))} / |x-y|^2 over
/// reference-point pairs and z in O_rho. A lower-bound estimate of eta.
double lipschitz_margin(const ParametricSurface& surface,
                        const std::vector<double>& polyradius,
                        std::size_t n_samples, std::uint64_t seed = 1);

struct GramianBounds {
  double zeta_min = 0;
  double zeta_max = 0;
  std::size_t violations = 0;
};

/// Sampled range of Re(g) over z in O_rho and chart points.
GramianBounds gramian_bounds(const ParametricSurface& surface,
                             const std::vector<double>& polyradius,
                             std::size_t n_samples, std::uint64_t seed = 1);

struct EllipseSample {
  std::vector<cplx> points;
  double semi_major = 0;
  double semi_minor = 0;
};

/// n boundary points (w + 1/w)/2 with |w| = s.
EllipseSample bernstein_ellipse_sample(double s, std::size_t n);

/// Polyradius rho_j = 1 + eps / (s * b_j), so sum (rho_j - 1) b_j = eps.
std::vector<double> polyradius_for_epsilon(const ParametricSurface& surface,
                                           double eps);

struct EpsilonEstimate {
  double epsilon = 0;          // reported admissible value (backed off)
  double failing_epsilon = 0;  // smallest inflation found to fail
  std::vector<double> polyradius;
  double eta_hat = 0;
  GramianBounds zeta;
};

/// Inflates eps until the Lipschitz margin or Gramian positivity fails,
/// bisects the transition, and backs off by a factor 0.5.
EpsilonEstimate estimate_admissible_epsilon(const ParametricSurface& surface,
                                            std::size_t n_samples,
                                            std::uint64_t seed = 1);

/// Builds a surface from its JSON description:
/// {"reference": "sphere"|"box"|"flat", "radius", "phi0": {"scale", "shift"},
///  "modes": {"count", "theta", "amplitude", "bump_radius", "centers"?}, "p"?}
ParametricSurface surface_from_json(const nlohmann::json& spec);

}  // namespace parabem
