#include "parabem/kernels.hpp"

#include <cmath>
#include <sstream>

#include "parabem/error.hpp"

namespace parabem {

void WaveContext::validate() const {
  if (!(kappa > 0)) throw DomainError("kappa must be positive");
  if (eta == 0) throw DomainError("eta must be nonzero");
  if (std::abs(d_inc.norm() - 1) > 1e-12 || std::abs(d_obs.norm() - 1) > 1e-12) {
    throw DomainError("incident and observation directions must be unit vectors");
  }
}

namespace {

Vec3 unit_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw DomainError("expected a 3-vector");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  const double n = v.norm();
  if (n == 0) throw DomainError("direction must be nonzero");
  return v / n;
}

}  // namespace

WaveContext wave_from_json(const nlohmann::json& j) {
  WaveContext ctx;
  ctx.kappa = j.value("kappa", 1.0);
  ctx.eta = j.value("eta", ctx.kappa);
  if (j.contains("d_inc")) ctx.d_inc = unit_vec(j.at("d_inc"));
  if (j.contains("d_obs")) ctx.d_obs = unit_vec(j.at("d_obs"));
  ctx.validate();
  return ctx;
}

cplx complex_norm(const CVec3& v) {
  const cplx vv = bdot(v, v);
  if (!(vv.real() > 0)) {
    std::ostringstream os;
    os << "Re(v.v) = " << vv.real() << " <= 0: outside the complex distance domain";
    throw InadmissibleError(os.str());
  }
  return std::sqrt(vv);
}

cplx slp_kernel(const WaveContext& ctx, const CVec3& v) {
  const cplx r = complex_norm(v);
  return std::exp(kI * ctx.kappa * r) / (4 * kPi * r);
}

cplx dlp_kernel(const WaveContext& ctx, const CVec3& normal_at_y,
                const CVec3& v) {
  const cplx r = complex_norm(v);
  const cplx ikr = kI * ctx.kappa * r;
  return bdot(normal_at_y, v) * std::exp(ikr) * (ikr - 1.0) /
         (4 * kPi * r * r * r);
}

cplx adjoint_dlp_kernel(const WaveContext& ctx, const CVec3& normal_at_x,
                        const CVec3& v) {
  return dlp_kernel(ctx, normal_at_x, v);
}

IncidentTrace incident_trace(const WaveContext& ctx, const CVec3& x,
                             const CVec3& normal) {
  const CVec3 d = ctx.d_inc.cast<cplx>();
  const cplx e = std::exp(kI * ctx.kappa * bdot(x, d));
  return {e, kI * ctx.kappa * bdot(normal, d) * e};
}

IncidentTrace incident_trace(const WaveContext& ctx,
                             const ParametricSurface& surface,
                             const std::vector<double>& y, int patch,
                             const Vec2& u) {
  const auto z = ComplexParamPoint::real(y);
  z.check_admissible();
  const SurfacePoint p = surface.evaluate(patch, u, z.values);
  return incident_trace(ctx, p.x, p.normal);
}

}  // namespace parabem
