#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/operators.hpp"
#include "parabem/scattering.hpp"

namespace parabem {

/// Parametric map into C^m evaluated at complex parameter points.
using HoloFn = std::function<VectorXc(const ComplexParamPoint&)>;
using ScalarHoloFn = std::function<cplx(const ComplexParamPoint&)>;
using Holo1D = std::function<cplx(cplx)>;

inline constexpr int kContourNodes = 32;

/// d^m f / dz_j^m by the trapezoidal rule on the circle |w - z_j| = radius.
/// Throws InadmissibleError when the disk leaves O_{rho_j}.
VectorXc cauchy_derivative(const HoloFn& f, const ComplexParamPoint& z,
                           std::size_t j, double radius, int m,
                           int nodes = kContourNodes);
/// Scalar one-variable form (no region check).
cplx cauchy_derivative(const Holo1D& f, cplx z, double radius, int m,
                       int nodes = kContourNodes);

/// Central difference along the real direction of z_j.
VectorXc finite_difference(const HoloFn& f, const ComplexParamPoint& z,
                           std::size_t j, double step = 1e-4);

/// (f(z) + conj(f(conj z))) / 2 and (f(z) - conj(f(conj z))) / (2i).
/// Throws InadmissibleError when z or conj(z) is outside the region.
cplx real_part_extension(const ScalarHoloFn& f, const ComplexParamPoint& z);
cplx imag_part_extension(const ScalarHoloFn& f, const ComplexParamPoint& z);

struct HolomorphyTolerances {
  double derivative = 1e-5;  // relative |cauchy - fd|
  double radius = 1e-8;      // relative change between radius and radius/2
};

struct HolomorphyReport {
  std::string target_name;
  std::vector<double> polyradius;
  double max_norm = 0;
  std::size_t n_samples = 0;
  std::size_t violations = 0;
  std::vector<std::string> failures;
  std::vector<double> derivative_residuals;  // per dimension, -1 if untested
  double radius_residual = 0;
  std::size_t n_derivative_checks = 0;
  HolomorphyTolerances tolerances;
  bool verdict = false;

  /// Recomputes the verdict from the stored data and tolerances.
  void update_verdict();
};

nlohmann::json report_to_json(const HolomorphyReport& r);

/// Sup of the max-norm of f over n_samples points of the poly-ellipse
/// prod_j E_{rho_j}: half on the boundaries, half inside. Inadmissible
/// evaluations are recorded as violations.
HolomorphyReport boundedness_scan(const std::string& name, const HoloFn& f,
                                  const std::vector<double>& polyradius,
                                  std::size_t n_samples, std::uint64_t seed = 1);

/// Scans on nested regions (polyradii increasing componentwise). Each entry
/// reports the sup over its own samples and those of the smaller regions.
std::vector<HolomorphyReport> nested_scan(
    const std::string& name, const HoloFn& f,
    const std::vector<std::vector<double>>& polyradii, std::size_t n_samples,
    std::uint64_t seed = 1);

struct DerivativeCheck {
  ComplexParamPoint z;
  std::size_t dimension = 0;
  double radius = 0;
  double fd_residual = 0;      // relative |cauchy - fd|
  double radius_residual = 0;  // relative change of orders 0 and 1 with radius/2
};

/// Compares the first Cauchy derivative with central finite differences and
/// with the contour at half the radius. Residuals are relative to
/// max(|f(z)|, |df|) in the max norm.
DerivativeCheck check_derivative(const HoloFn& f, const ComplexParamPoint& z,
                                 std::size_t j, double radius,
                                 double step = 1e-4);

/// Runs check_derivative at n_points random (z, j): z in the poly-ellipse
/// with half the excess 1 + (rho_j - 1)/2 and contour radius (rho_j - 1)/4.
HolomorphyReport derivative_scan(const std::string& name, const HoloFn& f,
                                 const std::vector<double>& polyradius,
                                 std::size_t n_points, std::uint64_t seed = 1,
                                 double step = 1e-4);

/// Built-in non-holomorphic target z -> |z_1|^2.
HoloFn negative_control();

// Targets -------------------------------------------------------------------

/// Gramian entries and determinant at a fixed chart point.
HoloFn gramian_target(const ParametricSurface& surface, int patch,
                      const Vec2& u);
HoloFn normal_target(const ParametricSurface& surface, int patch,
                     const Vec2& u);
/// The listed rows of the slp, dlp or adjoint_dlp matrix, concatenated.
HoloFn operator_rows_target(const ParametricSurface& surface,
                            const WaveContext& ctx, const QuadConfig& cfg,
                            OperatorKind kernel,
                            const std::vector<std::size_t>& rows);
/// Far fields of the forward model at its observation direction.
HoloFn far_field_target(const ForwardModel& model);

}  // namespace parabem
