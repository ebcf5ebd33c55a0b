#include "parabem/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "parabem/error.hpp"
#include "parabem/schema_text.hpp"

namespace parabem {

const nlohmann::json& experiment_schema() {
  static const nlohmann::json schema =
      nlohmann::json::parse(detail::kExperimentSchemaText);
  return schema;
}

namespace {

std::string child(const std::string& ptr, const std::string& key) {
  std::string k;
  for (char c : key) {
    if (c == '~') {
      k += "~0";
    } else if (c == '/') {
      k += "~1";
    } else {
      k += c;
    }
  }
  return ptr + "/" + k;
}

bool has_type(const nlohmann::json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  if (type == "null") return v.is_null();
  return false;
}

nlohmann::json fill_defaults(const nlohmann::json& v, const nlohmann::json& schema,
                    const std::string& ptr) {
  const std::string where = ptr.empty() ? "/" : ptr;
  if (schema.contains("type")) {
    const std::string type = schema.at("type").get<std::string>();
    if (!has_type(v, type)) {
      throw ConfigError(where, "expected " + type + ", got " + v.type_name());
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema.at("enum")) found = found || e == v;
    if (!found) {
      throw ConfigError(where, "value " + v.dump() + " not in " +
                                   schema.at("enum").dump());
    }
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema.at("minimum").get<double>()) {
      throw ConfigError(where, "must be >= " + schema.at("minimum").dump());
    }
    if (schema.contains("maximum") && x > schema.at("maximum").get<double>()) {
      throw ConfigError(where, "must be <= " + schema.at("maximum").dump());
    }
    if (schema.contains("exclusiveMinimum") &&
        x <= schema.at("exclusiveMinimum").get<double>()) {
      throw ConfigError(where, "must be > " + schema.at("exclusiveMinimum").dump());
    }
    if (schema.contains("exclusiveMaximum") &&
        x >= schema.at("exclusiveMaximum").get<double>()) {
      throw ConfigError(where, "must be < " + schema.at("exclusiveMaximum").dump());
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") &&
        v.size() < schema.at("minItems").get<std::size_t>()) {
      throw ConfigError(where, "needs at least " + schema.at("minItems").dump() + " items");
    }
    if (schema.contains("maxItems") &&
        v.size() > schema.at("maxItems").get<std::size_t>()) {
      throw ConfigError(where, "allows at most " + schema.at("maxItems").dump() + " items");
    }
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t k = 0; k < v.size(); ++k) {
      out.push_back(schema.contains("items")
                        ? fill_defaults(v[k], schema.at("items"), ptr + "/" + std::to_string(k))
                        : v[k]);
    }
    return out;
  }
  if (v.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    const nlohmann::json props =
        schema.value("properties", nlohmann::json::object());
    if (schema.contains("required")) {
      for (const auto& r : schema.at("required")) {
        const std::string key = r.get<std::string>();
        if (!v.contains(key)) {
          throw ConfigError(child(ptr, key), "required field is missing");
        }
      }
    }
    const bool closed = schema.contains("additionalProperties") &&
                        schema.at("additionalProperties") == false;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props.contains(it.key())) {
        out[it.key()] = fill_defaults(it.value(), props.at(it.key()), child(ptr, it.key()));
      } else if (closed) {
        throw ConfigError(child(ptr, it.key()), "unknown field");
      } else {
        out[it.key()] = it.value();
      }
    }
    for (auto it = props.begin(); it != props.end(); ++it) {
      if (!out.contains(it.key()) && it.value().contains("default")) {
        out[it.key()] =
            fill_defaults(it.value().at("default"), it.value(), child(ptr, it.key()));
      }
    }
    return out;
  }
  return v;
}

Vec3 vec3(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return {v[0], v[1], v[2]};
}

}  // namespace

nlohmann::json apply_schema(const nlohmann::json& doc,
                            const nlohmann::json& schema) {
  return fill_defaults(doc, schema, "");
}

ExperimentConfig config_from_json(const nlohmann::json& raw) {
  ExperimentConfig c;
  c.document = apply_schema(raw, experiment_schema());
  const nlohmann::json& d = c.document;

  const int count = d.at("surface").at("modes").at("count").get<int>();
  if (d.at("surface").at("modes").contains("centers") &&
      d.at("surface").at("modes").at("centers").size() !=
          static_cast<std::size_t>(count)) {
    throw ConfigError("/surface/modes/centers", "needs one center per mode");
  }
  try {
    c.surface = std::make_shared<const ParametricSurface>(surface_from_json(d.at("surface")));
  } catch (const DomainError& e) {
    throw ConfigError("/surface", e.what());
  }
  c.truncation = d.contains("truncation") ? d.at("truncation").get<int>() : count;
  if (c.truncation > count) {
    throw ConfigError("/truncation", "exceeds the number of modes");
  }

  const auto& w = d.at("wave");
  c.wave.kappa = w.at("kappa").get<double>();
  c.wave.eta = w.contains("eta") ? w.at("eta").get<double>() : c.wave.kappa;
  c.wave.d_inc = vec3(w.at("d_inc"));
  c.wave.d_obs = vec3(w.at("d_obs"));
  if (!(c.wave.d_inc.norm() > 0)) throw ConfigError("/wave/d_inc", "must be nonzero");
  if (!(c.wave.d_obs.norm() > 0)) throw ConfigError("/wave/d_obs", "must be nonzero");
  c.wave.d_inc.normalize();
  c.wave.d_obs.normalize();
  if (c.wave.eta == 0) throw ConfigError("/wave/eta", "must be nonzero");

  c.forward.quad = quad_from_json(d.at("quadrature"));
  c.forward.solver = solver_from_json(d.at("solver"));
  c.forward.variant = variant_from_string(d.at("variant").get<std::string>());
  c.forward.convention = convention_from_string(d.at("convention").get<std::string>());

  c.y = d.at("y").get<std::vector<double>>();
  if (c.y.size() > static_cast<std::size_t>(c.truncation)) {
    throw ConfigError("/y", "longer than the truncation dimension");
  }
  c.y.resize(static_cast<std::size_t>(c.truncation), 0.0);

  const auto& s = d.at("surrogate");
  c.surrogate.budget = s.at("budget").get<int>();
  c.surrogate.q = normalization_from_string(s.at("q").get<std::string>());
  c.surrogate.sampling.mode = s.at("sampling").get<std::string>();
  c.surrogate.sampling.oversampling = s.at("oversampling").get<double>();
  c.surrogate.sampling.gauss_order = s.at("gauss_order").get<int>();
  c.surrogate.forward_order = s.at("forward_order").get<int>();
  c.surrogate.n_list = s.at("n_list").get<std::vector<int>>();
  c.surrogate.floor = s.at("floor").get<double>();

  const auto& h = d.at("holocheck");
  c.holocheck.epsilon = h.at("epsilon").get<double>();
  if (h.contains("polyradius")) {
    c.holocheck.polyradius = h.at("polyradius").get<std::vector<double>>();
    if (c.holocheck.polyradius.size() != static_cast<std::size_t>(c.truncation)) {
      throw ConfigError("/holocheck/polyradius", "length must equal the truncation");
    }
  }
  c.holocheck.n_samples = h.at("n_samples").get<std::size_t>();
  c.holocheck.n_points = h.at("n_points").get<std::size_t>();
  c.holocheck.step = h.at("step").get<double>();
  c.holocheck.tolerances.derivative = h.at("tol_derivative").get<double>();
  c.holocheck.tolerances.radius = h.at("tol_radius").get<double>();
  c.holocheck.forward_order = h.at("forward_order").get<int>();
  c.holocheck.rows = h.at("rows").get<std::vector<std::size_t>>();

  const auto& b = d.at("bayes");
  if (b.contains("spec")) c.bayes.spec = b.at("spec").get<std::string>();
  c.bayes.integration.method = b.at("method").get<std::string>();
  c.bayes.integration.gauss_points = b.at("gauss_points").get<int>();
  c.bayes.integration.n_points = b.at("n_points").get<std::size_t>();
  c.bayes.qoi_order = b.at("qoi_order").get<int>();
  c.bayes.forward_order = b.at("forward_order").get<int>();

  const auto& v = d.at("convergence");
  c.convergence.regularizer_n = v.at("regularizer_n").get<std::vector<int>>();
  c.convergence.regularizer_samples = v.at("regularizer_samples").get<int>();
  c.convergence.regularizer_order = v.at("regularizer_order").get<int>();
  c.convergence.quadrature_orders = v.at("quadrature_orders").get<std::vector<int>>();
  c.convergence.reference_order = v.at("reference_order").get<int>();

  c.output = d.at("output").get<std::string>();
  c.seed = d.at("seed").get<std::uint64_t>();
  c.threads = d.at("threads").get<int>();
  c.surrogate.sampling.seed = c.seed;
  c.bayes.integration.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

ForwardModel ExperimentConfig::forward_model(int order) const {
  ForwardConfig f = forward;
  f.quad.order = order;
  return ForwardModel(surface, wave, f);
}

ForwardModel ExperimentConfig::forward_model() const {
  return ForwardModel(surface, wave, forward);
}

std::vector<double> ExperimentConfig::polyradius() const {
  if (!holocheck.polyradius.empty()) return holocheck.polyradius;
  std::vector<double> rho = polyradius_for_epsilon(*surface, holocheck.epsilon);
  rho.resize(static_cast<std::size_t>(truncation));
  return rho;
}

}  // namespace parabem
