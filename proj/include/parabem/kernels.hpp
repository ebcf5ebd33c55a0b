#pragma once

#include <nlohmann/json.hpp>

#include "parabem/geometry.hpp"
#include "parabem/types.hpp"

namespace parabem {

struct WaveContext {
  double kappa = 1.0;
  double eta = 1.0;
  Vec3 d_inc{0, 0, 1};
  Vec3 d_obs{0, 0, 1};

  /// Throws DomainError unless kappa > 0, eta != 0 and both directions are
  /// unit vectors.
  void validate() const;
};

WaveContext wave_from_json(const nlohmann::json& j);

/// sqrt(v.v) on the principal branch, v.v bilinear. Throws InadmissibleError
/// when Re(v.v) <= 0.
cplx complex_norm(const CVec3& v);

/// exp(i k r) / (4 pi r), r = complex_norm(v).
cplx slp_kernel(const WaveContext& ctx, const CVec3& v);

/// (n.v) exp(i k r) (i k r - 1) / (4 pi r^3). Called with v = y - x this is
/// the normal derivative of the fundamental solution at the source point y.
cplx dlp_kernel(const WaveContext& ctx, const CVec3& normal_at_y,
                const CVec3& v);

/// Normal derivative at the target: called with v = x - y and the target
/// normal. Same closed form as dlp_kernel.
cplx adjoint_dlp_kernel(const WaveContext& ctx, const CVec3& normal_at_x,
                        const CVec3& v);

struct IncidentTrace {
  cplx dirichlet;
  cplx neumann;
};

/// Plane wave exp(i k x.d) and its normal derivative i k (n.d) exp(i k x.d)
/// at a real surface point.
IncidentTrace incident_trace(const WaveContext& ctx,
                             const ParametricSurface& surface,
                             const std::vector<double>& y, int patch,
                             const Vec2& u);
IncidentTrace incident_trace(const WaveContext& ctx, const CVec3& x,
                             const CVec3& normal);

}  // namespace parabem
