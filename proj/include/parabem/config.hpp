#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/bayes.hpp"
#include "parabem/holocheck.hpp"
#include "parabem/scattering.hpp"
#include "parabem/surrogate.hpp"

namespace parabem {

/// The published experiment schema (schemas/experiment.schema.json).
const nlohmann::json& experiment_schema();

/// Validates `doc` against a JSON Schema subset (type, properties,
/// required, additionalProperties, default, enum, minimum, maximum,
/// exclusiveMinimum, items, minItems, maxItems) and returns it with every
/// default filled in. Throws ConfigError naming the offending JSON pointer.
nlohmann::json apply_schema(const nlohmann::json& doc,
                            const nlohmann::json& schema);

struct SurrogateSettings {
  int budget = 16;
  Normalization q = Normalization::l2;
  SamplingConfig sampling;
  int forward_order = 4;
  std::vector<int> n_list{2, 4, 8, 16, 32};
  double floor = 1e-11;
};

struct HolocheckSettings {
  double epsilon = 0.05;
  std::vector<double> polyradius;  // empty: derived from epsilon
  std::size_t n_samples = 16;
  std::size_t n_points = 10;
  double step = 1e-4;
  HolomorphyTolerances tolerances;
  int forward_order = 4;
  std::vector<std::size_t> rows{0};
};

struct BayesSettings {
  std::string spec;
  IntegrationConfig integration;
  int qoi_order = 4;
  int forward_order = 4;
};

struct ConvergenceSettings {
  std::vector<int> regularizer_n{2, 4, 8, 16, 32};
  int regularizer_samples = 5;
  int regularizer_order = 8;
  std::vector<int> quadrature_orders{2, 3, 4, 5, 6, 8};
  int reference_order = 12;
};

struct ExperimentConfig {
  nlohmann::json document;  // validated, defaults filled
  std::shared_ptr<const ParametricSurface> surface;
  WaveContext wave;
  ForwardConfig forward;
  std::vector<double> y;  // evaluation point, length = truncation
  int truncation = 0;
  SurrogateSettings surrogate;
  HolocheckSettings holocheck;
  BayesSettings bayes;
  ConvergenceSettings convergence;
  std::string output = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  /// Forward model at another Gauss order (coarse surrogate/bayes solves).
  ForwardModel forward_model(int order) const;
  ForwardModel forward_model() const;
  /// Polyradius of the holomorphy checks.
  std::vector<double> polyradius() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace parabem
