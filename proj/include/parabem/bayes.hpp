#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/scattering.hpp"

namespace parabem {

struct DirectionPair {
  Vec3 d_inc{0, 0, 1};
  Vec3 d_obs{0, 0, 1};
};

struct PosteriorSpec {
  Eigen::VectorXd observations;  // (Re, Im) per direction pair
  Eigen::MatrixXd covariance;
  std::vector<DirectionPair> directions;
  Variant variant = Variant::indirect;
  /// Test hook: treat the precision matrix as zero, so the potential
  /// vanishes identically and no forward solve is needed.
  bool zero_precision = false;
  /// Evaluate the evidence from log-densities (no underflow for small noise).
  bool log_space = false;

  /// Throws DomainError on size mismatch, asymmetry or a covariance that is
  /// not positive definite.
  void validate() const;
};

/// {"observations": [...], "covariance": [[...]], "directions":
///  [{"d_inc": [..], "d_obs": [..]}], "variant", "zero_precision",
///  "log_space"}.
PosteriorSpec posterior_from_json(const nlohmann::json& j);
nlohmann::json posterior_to_json(const PosteriorSpec& spec);

/// Parameter-to-observation map J(y) = (Re u_inf, Im u_inf) over direction
/// pairs, memoized on the parameter vector quantized to 1e-12.
class ObservationModel {
 public:
  ObservationModel(std::shared_ptr<const ParametricSurface> surface,
                   WaveContext ctx, ForwardConfig cfg,
                   std::vector<DirectionPair> directions);

  const ParametricSurface& surface() const { return *surface_; }
  std::size_t n_outputs() const { return 2 * directions_.size(); }

  /// Complex far fields, one per direction pair (no caching).
  VectorXc far_fields(const ComplexParamPoint& z) const;
  /// Real observation vector at a real point (cached).
  Eigen::VectorXd observe(const std::vector<double>& y) const;
  /// Holomorphic extension of the observation vector: the real and
  /// imaginary parts replaced by their extensions through conj(z).
  VectorXc observe_extension(const ComplexParamPoint& z) const;

  /// Number of forward evaluations actually performed.
  std::size_t n_evals() const;
  std::size_t cache_size() const;

 private:
  std::shared_ptr<const ParametricSurface> surface_;
  WaveContext ctx_;
  ForwardConfig cfg_;
  std::vector<DirectionPair> directions_;
  std::shared_ptr<const AssemblyPlan> plan_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<long long>, Eigen::VectorXd> cache_;
  mutable std::size_t n_evals_ = 0;
};

/// Convenience: J(y) without a persistent cache.
Eigen::VectorXd observe(std::shared_ptr<const ParametricSurface> surface,
                        const WaveContext& ctx, const ForwardConfig& cfg,
                        const std::vector<DirectionPair>& directions,
                        const std::vector<double>& y);

/// 1/2 (obs - J)^T Sigma^-1 (obs - J) via a Cholesky factorization.
/// Throws SolveError when the covariance cannot be factorized.
double potential(const PosteriorSpec& spec, const Eigen::VectorXd& prediction);
/// Same quadratic form, bilinear in a complex prediction.
cplx potential(const PosteriorSpec& spec, const VectorXc& prediction);

class Posterior {
 public:
  Posterior(PosteriorSpec spec, std::shared_ptr<const ObservationModel> model);

  const PosteriorSpec& spec() const { return spec_; }
  const ObservationModel& model() const { return *model_; }

  double potential(const std::vector<double>& y) const;
  /// exp(-potential) in (0, 1].
  double density(const std::vector<double>& y) const;
  double log_density(const std::vector<double>& y) const;
  /// exp(-potential) with the holomorphic extension of the observations.
  cplx density_extension(const ComplexParamPoint& z) const;

 private:
  PosteriorSpec spec_;
  std::shared_ptr<const ObservationModel> model_;
};

struct IntegrationConfig {
  std::string method = "gauss";  // "gauss" | "qmc" | "mc"
  int gauss_points = 10;         // per axis
  std::size_t n_points = 1024;   // qmc (rounded up to a prime) and mc
  std::uint64_t seed = 1;
};

IntegrationConfig integration_from_json(const nlohmann::json& j);

/// Points and weights of the selected rule on [-1,1]^s for the uniform
/// probability measure. Tensor Gauss needs s <= 3.
struct ParameterRule {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  std::string method;
};
ParameterRule parameter_rule(int s, const IntegrationConfig& cfg);

/// Generating vector of a rank-1 lattice with n points (n prime) built
/// component by component for product weights 1/j^2.
std::vector<std::uint64_t> cbc_lattice(std::uint64_t n, int s);

/// Largest prime >= n.
std::uint64_t next_prime(std::uint64_t n);

struct EvidenceResult {
  double Z = 0;
  double log_Z = 0;
  std::vector<double> mean_y;     // posterior mean of the parameters
  std::vector<Vec3> mean_qoi;     // posterior mean of r_y at the QoI nodes
  std::vector<Node> qoi_nodes;
  std::string method;
  std::size_t n_points = 0;
  std::size_t n_evals = 0;
};

using LogDensityFn = std::function<double(const std::vector<double>&)>;
using QoIFn = std::function<std::vector<Vec3>(const std::vector<double>&)>;

/// Z = int exp(log_density) dmu_0 and posterior means of y and of the QoI.
/// Without log_space, Z below 1e-300 throws DomainError.
EvidenceResult evidence_and_mean(const LogDensityFn& log_density, int s,
                                 const IntegrationConfig& cfg,
                                 const QoIFn& qoi = {}, bool log_space = false);

/// Posterior evidence with the shape map r_y sampled at the Gauss nodes of
/// the given order as QoI.
EvidenceResult evidence_and_mean(const Posterior& posterior,
                                 const IntegrationConfig& cfg, int qoi_order);

nlohmann::json evidence_to_json(const EvidenceResult& r);

}  // namespace parabem
