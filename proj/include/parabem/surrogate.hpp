#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/types.hpp"

namespace parabem {

/// Legendre normalization: l2 -> unit norm under dx/2 on [-1,1]
/// (sqrt(2n+1) L_n); linf -> classical L_n with L_n(1) = 1.
enum class Normalization { l2, linf };

Normalization normalization_from_string(const std::string& s);
const char* to_string(Normalization q);

/// Throws DomainError when |x| > 1.
double legendre_eval(int n, Normalization q, double x);
/// Values P_0..P_n at x.
std::vector<double> legendre_all(int n, Normalization q, double x);

/// Finitely supported multi-index, stored without trailing zeros.
using MultiIndex = std::vector<int>;
MultiIndex trim(MultiIndex nu);

struct MultiIndexSet {
  std::vector<MultiIndex> indices;
  bool downward_closed = false;
  bool anchored = false;

  std::size_t size() const { return indices.size(); }
  /// Largest dimension any index touches.
  std::size_t dimension() const;
  bool contains(const MultiIndex& nu) const;
  std::ptrdiff_t find(const MultiIndex& nu) const;
};

bool is_downward_closed(const std::vector<MultiIndex>& set);
/// Downward closed and e_j in the set implies e_1..e_{j-1} in the set.
bool is_anchored(const std::vector<MultiIndex>& set);

/// Validates and flags a user-supplied set. Throws DomainError when it is
/// not downward closed.
MultiIndexSet make_index_set(std::vector<MultiIndex> indices);

/// {nu : prod_{nu_k != 0} (nu_k + 1) <= n, nu_k = 0 for k > min(n, s)}.
MultiIndexSet anchored_set(int n, int s);
/// {nu : |nu|_1 <= degree} in s dimensions.
MultiIndexSet total_degree_set(int degree, int s);

struct SamplingConfig {
  std::string mode = "mc";  // "mc" | "gauss"
  double oversampling = 10;
  int gauss_order = 0;      // points per axis for "gauss"; 0 = max degree + 1
  std::uint64_t seed = 1;
};

struct SurrogateModel {
  MultiIndexSet index_set;
  MatrixXc coeffs;  // |Lambda| x output dimension
  Normalization normalization = Normalization::l2;
  int truncation_dim = 0;
  double residual = 0;          // relative least-squares residual
  std::size_t n_samples = 0;

  VectorXc evaluate(const std::vector<double>& y) const;
  /// Coefficient norms in the l2 normalization (output norm with `weights`
  /// for vector-valued models, unit weights when empty).
  std::vector<double> l2_coefficient_norms(
      const std::vector<double>& weights = {}) const;
};

using VectorEvaluator = std::function<VectorXc(const std::vector<double>&)>;
using ScalarEvaluator = std::function<cplx(const std::vector<double>&)>;

/// Least-squares fit on uniform Monte Carlo samples of [-1,1]^s (QR) or on a
/// tensor Gauss grid (weighted least squares, exact projection for
/// polynomials of low enough degree). Throws SolveError on rank deficiency.
SurrogateModel fit_surrogate(const VectorEvaluator& f, const MultiIndexSet& set,
                             int s, const SamplingConfig& sampling,
                             Normalization q = Normalization::l2);
SurrogateModel fit_surrogate(const ScalarEvaluator& f, const MultiIndexSet& set,
                             int s, const SamplingConfig& sampling,
                             Normalization q = Normalization::l2);

/// Tensor Legendre design matrix rows P_nu(y_k).
Eigen::MatrixXd design_matrix(const MultiIndexSet& set,
                              const std::vector<std::vector<double>>& ys,
                              Normalization q);

/// For each n, the l2 norm of the coefficients left after keeping the n
/// largest (in the l2 normalization). With `downward_closed`, the kept set
/// is grown greedily by the largest coefficient whose addition keeps it
/// downward closed. Throws DomainError when n > |Lambda|.
std::vector<std::pair<int, double>> best_n_term_curve(
    const SurrogateModel& model, const std::vector<int>& n_list,
    bool downward_closed = false, const std::vector<double>& weights = {});

struct DecayRate {
  int dimension = 0;     // 1-based
  double slope = 0;      // fitted slope of log|c_{k e_j}| against k
  double rho = 0;        // exp(-slope)
  double r2 = 0;
  int n_points = 0;
};

/// Log-linear fits of the univariate chains k e_j, k >= 1, using the leading
/// chain entries above max(floor, 10 * fit residual) * max|c|. Throws DomainError for a dimension with
/// fewer than three usable chain coefficients.
std::vector<DecayRate> decay_diagnostics(const SurrogateModel& model,
                                         double floor = 1e-11);

/// Least-squares slope of log(error) against log(n).
double fit_loglog_slope(const std::vector<std::pair<int, double>>& curve);

nlohmann::json surrogate_to_json(const SurrogateModel& model);
SurrogateModel surrogate_from_json(const nlohmann::json& j);

}  // namespace parabem
