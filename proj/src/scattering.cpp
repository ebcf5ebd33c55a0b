#include "parabem/scattering.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <unsupported/Eigen/IterativeSolvers>

#include "parabem/error.hpp"

namespace parabem {

FarFieldConvention convention_from_string(const std::string& s) {
  if (s == "paper") return FarFieldConvention::paper;
  if (s == "standard3d") return FarFieldConvention::standard3d;
  throw DomainError("unknown far-field convention '" + s + "'");
}

const char* to_string(FarFieldConvention c) {
  return c == FarFieldConvention::paper ? "paper" : "standard3d";
}

SolverOptions solver_from_json(const nlohmann::json& j) {
  SolverOptions o;
  o.method = j.value("method", o.method);
  o.tol = j.value("tol", o.tol);
  o.restart = j.value("restart", o.restart);
  if (o.method != "lu" && o.method != "gmres" && o.method != "auto") {
    throw DomainError("solver method must be lu|gmres|auto");
  }
  return o;
}

VectorXc rhs(const Discretization& disc, const WaveContext& ctx,
             Variant variant) {
  VectorXc f(static_cast<Eigen::Index>(disc.size()));
  for (std::size_t i = 0; i < disc.size(); ++i) {
    const IncidentTrace t =
        incident_trace(ctx, disc.points[i].x, disc.points[i].normal);
    f(static_cast<Eigen::Index>(i)) =
        variant == Variant::direct ? t.neumann - kI * ctx.eta * t.dirichlet
                                   : -t.dirichlet;
  }
  return f;
}

VectorXc rhs(const ParametricSurface& surface, const WaveContext& ctx,
             const std::vector<double>& y, Variant variant, int order) {
  return rhs(discretize(surface, ComplexParamPoint::real(y), order), ctx,
             variant);
}

DensitySolution solve(const DiscreteOperator& op, const VectorXc& f,
                      const SolverOptions& opts) {
  const MatrixXc& A = op.matrix;
  if (A.rows() != f.size()) throw DomainError("rhs size does not match operator");
  DensitySolution sol;
  sol.ctx = op.ctx;
  sol.z = op.z;
  sol.geometry = op.geometry;
  sol.variant = op.kind == OperatorKind::combined_direct ? Variant::direct
                                                         : Variant::indirect;
  const bool gmres =
      opts.method == "gmres" || (opts.method == "auto" && A.rows() > 4000);
  if (gmres) {
    Eigen::GMRES<MatrixXc, Eigen::IdentityPreconditioner> solver;
    solver.set_restart(opts.restart);
    solver.setTolerance(opts.tol);
    solver.setMaxIterations(std::max<Eigen::Index>(1000, 2 * A.rows()));
    solver.compute(A);
    sol.values = solver.solve(f);
    if (solver.info() != Eigen::Success) {
      throw SolveError("GMRES did not converge", 0);
    }
    sol.cond_est = 0;
  } else {
    Eigen::PartialPivLU<MatrixXc> lu(A);
    const double rcond = lu.rcond();
    sol.cond_est = rcond > 0 ? 1 / rcond : std::numeric_limits<double>::infinity();
    if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
      std::ostringstream os;
      os << "operator is numerically singular (condition estimate "
         << sol.cond_est << ")";
      throw SolveError(os.str(), sol.cond_est);
    }
    sol.values = lu.solve(f);
  }
  const double fn = f.norm();
  sol.residual = fn > 0 ? (A * sol.values - f).norm() / fn : 0.0;
  if (!sol.values.allFinite()) throw SolveError("non-finite solution", sol.cond_est);
  return sol;
}

namespace {

// sum_j w_j g(y_j) exp(-i k d.y_j) lambda_j with g = 1 or d.n_j.
cplx far_field_sum(const Discretization& disc, const VectorXc& density,
                   double kappa, const Vec3& d_obs, bool normal_factor) {
  if (static_cast<std::size_t>(density.size()) != disc.size()) {
    throw DomainError("density size does not match discretization");
  }
  const CVec3 d = d_obs.cast<cplx>();
  cplx s = 0;
  for (std::size_t j = 0; j < disc.size(); ++j) {
    const SurfacePoint& p = disc.points[j];
    cplx term = disc.weights[j] * std::exp(-kI * kappa * bdot(d, p.x)) *
                density(static_cast<Eigen::Index>(j));
    if (normal_factor) term *= bdot(d, p.normal);
    s += term;
  }
  return s;
}

}  // namespace

cplx far_field_slp(const Discretization& disc, const VectorXc& density,
                   double kappa, const Vec3& d_obs,
                   FarFieldConvention convention) {
  const cplx s = far_field_sum(disc, density, kappa, d_obs, false);
  if (convention == FarFieldConvention::paper) {
    return -std::exp(kI * kPi / 4.0) / std::sqrt(2 * kPi * kappa) * s;
  }
  return s / (4 * kPi);
}

cplx far_field_dlp(const Discretization& disc, const VectorXc& density,
                   double kappa, const Vec3& d_obs,
                   FarFieldConvention convention) {
  const cplx s = far_field_sum(disc, density, kappa, d_obs, true);
  if (convention == FarFieldConvention::paper) {
    return std::exp(kI * kPi / 4.0) * std::sqrt(kappa) / std::sqrt(2 * kPi) * s;
  }
  return -kI * kappa / (4 * kPi) * s;
}

cplx far_field(const DensitySolution& density, const Vec3& d_obs,
               FarFieldConvention convention) {
  if (!density.geometry) throw DomainError("density carries no geometry");
  const Discretization& disc = *density.geometry;
  const double k = density.ctx.kappa;
  const cplx s = far_field_slp(disc, density.values, k, d_obs, convention);
  if (density.variant == Variant::direct) {
    return convention == FarFieldConvention::paper ? s : -s;
  }
  const cplx d = far_field_dlp(disc, density.values, k, d_obs, convention);
  return d - kI * density.ctx.eta * s;
}

cplx far_field(const DensitySolution& density, FarFieldConvention convention) {
  return far_field(density, density.ctx.d_obs, convention);
}

ForwardModel::ForwardModel(std::shared_ptr<const ParametricSurface> surface,
                           WaveContext ctx, ForwardConfig cfg)
    : surface_(std::move(surface)), ctx_(ctx), cfg_(std::move(cfg)) {
  ctx_.validate();
  if (cfg_.reuse_rules && cfg_.quad.path == "duffy") {
    plan_ = make_assembly_plan(*surface_, cfg_.quad);
  }
}

DensitySolution ForwardModel::solve_density(const ComplexParamPoint& z) const {
  const DiscreteOperator A =
      assemble_combined(*surface_, ctx_, z, cfg_.quad, cfg_.variant, plan_.get());
  return solve(A, rhs(*A.geometry, ctx_, cfg_.variant), cfg_.solver);
}

ForwardResult ForwardModel::evaluate(const ComplexParamPoint& z,
                                     const std::vector<Vec3>& d_obs) const {
  const DensitySolution sol = solve_density(z);
  ForwardResult r;
  r.residual = sol.residual;
  r.cond_est = sol.cond_est;
  for (const Vec3& d : d_obs) {
    r.far_fields.push_back(parabem::far_field(sol, d, cfg_.convention));
  }
  return r;
}

ForwardResult ForwardModel::evaluate(const ComplexParamPoint& z) const {
  return evaluate(z, {ctx_.d_obs});
}

cplx ForwardModel::far_field(const std::vector<double>& y) const {
  return evaluate(ComplexParamPoint::real(y)).far_fields.at(0);
}

double qoi_ff_magnitude(const ForwardModel& model, const std::vector<double>& y) {
  return std::norm(model.far_field(y));
}

}  // namespace parabem
