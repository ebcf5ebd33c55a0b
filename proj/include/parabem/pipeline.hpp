#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/config.hpp"

namespace parabem {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(const std::string& data);

/// Deterministic JSON text: two-space indent, trailing newline.
std::string json_text(const nlohmann::json& j);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Writes artifacts into one directory and records their SHA-256 hashes.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  /// Writes the file and returns its hash.
  std::string write(const std::string& name, const std::string& content);
  std::string write_json(const std::string& name, const nlohmann::json& j);
  /// name -> sha256 of everything written so far.
  const nlohmann::json& hashes() const { return hashes_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json hashes_ = nlohmann::json::object();
};

struct CurveCsv {
  std::string control_name;
  std::vector<std::pair<double, double>> rows;  // (control_parameter, error)
  double fitted_slope = 0;
  std::string text() const;
};

/// Least-squares slope of log(error) against log(control).
double loglog_slope(const std::vector<std::pair<double, double>>& rows);

/// Solve and far field at cfg.y: writes density.csv, farfield.json and
/// summary.json (with the hashes of the other artifacts).
nlohmann::json run_pipeline(const ExperimentConfig& cfg, ArtifactWriter& out);

/// Far-field pattern at n_angles observation directions in the plane of
/// d_inc and d_obs: writes farfield_pattern.csv.
nlohmann::json run_farfield(const ExperimentConfig& cfg, ArtifactWriter& out,
                            int n_angles = 37);

/// Fits the far-field surrogate on the anchored set of the configured
/// budget: writes surrogate.json, decay.csv and error_curve.csv.
nlohmann::json run_surrogate(const ExperimentConfig& cfg, ArtifactWriter& out);

/// Boundedness and derivative scans for one target
/// (gramian|normal|slp|dlp|farfield|posterior|control): writes
/// holocheck_<target>.json.
nlohmann::json run_holocheck(const ExperimentConfig& cfg,
                             const std::string& target, ArtifactWriter& out,
                             const std::string& spec_path = "");

/// Evidence and posterior mean of the shape: writes bayes.json.
nlohmann::json run_bayes(const ExperimentConfig& cfg,
                         const std::string& spec_path, ArtifactWriter& out);

struct ConvergenceResult {
  CurveCsv curve;
  bool pass = false;
  std::string criterion;
};

/// study: regularizer | quadrature | surrogate. Writes
/// convergence_<study>.csv.
ConvergenceResult run_convergence(const ExperimentConfig& cfg,
                                  const std::string& study,
                                  ArtifactWriter& out);

/// Regularizer study data: max over parameter samples of the weighted
/// spectral norm of the regularization defect for each n.
CurveCsv regularizer_study(const ParametricSurface& surface,
                           const WaveContext& ctx, const QuadConfig& quad,
                           const std::vector<int>& n_list,
                           const std::vector<ComplexParamPoint>& samples);

/// Complex parameter samples in the poly-ellipse of the given polyradius.
std::vector<ComplexParamPoint> complex_samples(
    const std::vector<double>& polyradius, std::size_t n, std::uint64_t seed,
    const std::string& label);

/// Operator kinds by name: slp, dlp, adjoint_dlp, combined_direct,
/// combined_indirect.
DiscreteOperator assemble_named(const ExperimentConfig& cfg,
                                const std::string& kind);

}  // namespace parabem
