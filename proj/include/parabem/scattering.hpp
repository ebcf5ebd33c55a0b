#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/operators.hpp"

namespace parabem {

enum class FarFieldConvention { paper, standard3d };
FarFieldConvention convention_from_string(const std::string& s);
const char* to_string(FarFieldConvention c);

struct SolverOptions {
  std::string method = "auto";  // "lu" | "gmres" | "auto" (gmres above 4000)
  double tol = 1e-10;           // gmres relative residual
  int restart = 30;
};

SolverOptions solver_from_json(const nlohmann::json& j);

struct DensitySolution {
  VectorXc values;
  Variant variant = Variant::direct;
  WaveContext ctx;
  ComplexParamPoint z;
  std::shared_ptr<const Discretization> geometry;
  double residual = 0;
  double cond_est = 0;
};

/// Node samples of the right-hand side: direct i k (n.d) e - i eta e,
/// indirect -e, with e = exp(i k x.d_inc).
VectorXc rhs(const Discretization& disc, const WaveContext& ctx,
             Variant variant);
VectorXc rhs(const ParametricSurface& surface, const WaveContext& ctx,
             const std::vector<double>& y, Variant variant, int order);

/// Dense LU (or restarted GMRES) solve. Throws SolveError with a condition
/// estimate when the factorization is singular.
DensitySolution solve(const DiscreteOperator& op, const VectorXc& f,
                      const SolverOptions& opts = {});

/// Far-field pattern of the solved density in direction d_obs.
/// direct: paper -> FF_S(phi); standard3d -> -S_inf(phi).
/// indirect: FF_D(phi) - i eta FF_S(phi) (likewise for standard3d).
cplx far_field(const DensitySolution& density, const Vec3& d_obs,
               FarFieldConvention convention);
cplx far_field(const DensitySolution& density, FarFieldConvention convention);

/// Far field of a node density with the single- or double-layer far-field
/// functional only.
cplx far_field_slp(const Discretization& disc, const VectorXc& density,
                   double kappa, const Vec3& d_obs,
                   FarFieldConvention convention);
cplx far_field_dlp(const Discretization& disc, const VectorXc& density,
                   double kappa, const Vec3& d_obs,
                   FarFieldConvention convention);

/// Parameter-to-far-field map: assemble, solve, evaluate.
struct ForwardConfig {
  QuadConfig quad;
  Variant variant = Variant::indirect;
  FarFieldConvention convention = FarFieldConvention::standard3d;
  SolverOptions solver;
  bool reuse_rules = true;  // build an AssemblyPlan once per model
};

struct ForwardResult {
  std::vector<cplx> far_fields;  // one per requested observation direction
  double residual = 0;
  double cond_est = 0;
};

class ForwardModel {
 public:
  ForwardModel(std::shared_ptr<const ParametricSurface> surface,
               WaveContext ctx, ForwardConfig cfg);

  const ParametricSurface& surface() const { return *surface_; }
  const WaveContext& wave() const { return ctx_; }
  const ForwardConfig& config() const { return cfg_; }
  const AssemblyPlan* plan() const { return plan_.get(); }

  DensitySolution solve_density(const ComplexParamPoint& z) const;
  /// Far fields at the context's d_obs.
  ForwardResult evaluate(const ComplexParamPoint& z) const;
  ForwardResult evaluate(const ComplexParamPoint& z,
                         const std::vector<Vec3>& d_obs) const;
  cplx far_field(const std::vector<double>& y) const;

 private:
  std::shared_ptr<const ParametricSurface> surface_;
  WaveContext ctx_;
  ForwardConfig cfg_;
  std::shared_ptr<const AssemblyPlan> plan_;
};

/// |u_inf|^2 at the real parameter point y.
double qoi_ff_magnitude(const ForwardModel& model, const std::vector<double>& y);

}  // namespace parabem
