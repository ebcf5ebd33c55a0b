#include "parabem/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "parabem/error.hpp"
#include "parabem/rng.hpp"

namespace parabem {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ArtifactWriter::write(const std::string& name,
                                  const std::string& content) {
  std::ofstream f(dir_ / name, std::ios::binary);
  if (!f) throw Error("cannot write " + (dir_ / name).string());
  f << content;
  const std::string h = sha256_hex(content);
  hashes_[name] = h;
  return h;
}

std::string ArtifactWriter::write_json(const std::string& name,
                                       const nlohmann::json& j) {
  return write(name, json_text(j));
}

std::string CurveCsv::text() const {
  std::string s = control_name + ",error\n";
  for (const auto& [c, e] : rows) s += format_double(c) + "," + format_double(e) + "\n";
  s += "fitted_slope," + format_double(fitted_slope) + "\n";
  return s;
}

double loglog_slope(const std::vector<std::pair<double, double>>& rows) {
  std::vector<double> x, y;
  for (const auto& [c, e] : rows) {
    if (c > 0 && e > 0) {
      x.push_back(std::log(c));
      y.push_back(std::log(e));
    }
  }
  if (x.size() < 2) throw DomainError("need two positive points for a slope");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  return sxy / sxx;
}

namespace {

nlohmann::json cplx_json(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

nlohmann::json run_header(const ExperimentConfig& cfg) {
  nlohmann::json doc = cfg.document;
  doc.erase("output");
  doc.erase("threads");
  return {{"config_sha256", sha256_hex(json_text(doc))},
          {"seed", cfg.seed},
          {"truncation", cfg.truncation}};
}

}  // namespace

nlohmann::json run_pipeline(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const ForwardModel model = cfg.forward_model();
  const ComplexParamPoint z = ComplexParamPoint::real(cfg.y);
  const DensitySolution sol = model.solve_density(z);
  const Discretization& disc = *sol.geometry;

  std::string csv = "index,patch,u,v,re,im\n";
  for (std::size_t i = 0; i < disc.size(); ++i) {
    const auto& n = disc.nodes[i];
    const cplx d = sol.values(static_cast<Eigen::Index>(i));
    csv += std::to_string(i) + "," + std::to_string(n.patch) + "," +
           format_double(n.u(0)) + "," + format_double(n.u(1)) + "," +
           format_double(d.real()) + "," + format_double(d.imag()) + "\n";
  }
  out.write("density.csv", csv);

  const cplx ff = far_field(sol, cfg.wave.d_obs, cfg.forward.convention);
  nlohmann::json farfield = {
      {"far_field", cplx_json(ff)},
      {"abs", std::abs(ff)},
      {"d_inc", {cfg.wave.d_inc(0), cfg.wave.d_inc(1), cfg.wave.d_inc(2)}},
      {"d_obs", {cfg.wave.d_obs(0), cfg.wave.d_obs(1), cfg.wave.d_obs(2)}},
      {"convention", to_string(cfg.forward.convention)},
      {"variant", to_string(cfg.forward.variant)}};
  out.write_json("farfield.json", farfield);

  nlohmann::json summary = run_header(cfg);
  summary["command"] = "solve";
  summary["y"] = cfg.y;
  summary["n_nodes"] = disc.size();
  summary["kappa"] = cfg.wave.kappa;
  summary["eta"] = cfg.wave.eta;
  summary["order"] = cfg.forward.quad.order;
  summary["u_inf_re"] = ff.real();
  summary["u_inf_im"] = ff.imag();
  summary["residual"] = sol.residual;
  summary["cond_est"] = sol.cond_est;
  summary["artifacts"] = out.hashes();
  out.write_json("summary.json", summary);
  return summary;
}

nlohmann::json run_farfield(const ExperimentConfig& cfg, ArtifactWriter& out,
                            int n_angles) {
  if (n_angles < 2) throw DomainError("need at least two observation angles");
  const ForwardModel model = cfg.forward_model();
  const Vec3 d = cfg.wave.d_inc;
  Vec3 e = cfg.wave.d_obs - cfg.wave.d_obs.dot(d) * d;
  if (e.norm() < 1e-8) {
    e = std::abs(d(0)) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    e -= e.dot(d) * d;
  }
  e.normalize();
  std::vector<Vec3> dirs;
  std::vector<double> thetas;
  for (int k = 0; k < n_angles; ++k) {
    const double th = kPi * k / (n_angles - 1);
    thetas.push_back(th);
    dirs.push_back(std::cos(th) * d + std::sin(th) * e);
  }
  const ForwardResult r = model.evaluate(ComplexParamPoint::real(cfg.y), dirs);
  std::string csv = "theta,re,im,abs\n";
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    csv += format_double(thetas[k]) + "," + format_double(r.far_fields[k].real()) +
           "," + format_double(r.far_fields[k].imag()) + "," +
           format_double(std::abs(r.far_fields[k])) + "\n";
  }
  out.write("farfield_pattern.csv", csv);
  nlohmann::json summary = run_header(cfg);
  summary["command"] = "farfield";
  summary["n_angles"] = n_angles;
  summary["residual"] = r.residual;
  summary["artifacts"] = out.hashes();
  out.write_json("summary.json", summary);
  return summary;
}

nlohmann::json run_surrogate(const ExperimentConfig& cfg, ArtifactWriter& out) {
  if (cfg.truncation < 1) throw ConfigError("/truncation", "surrogate needs s >= 1");
  const ForwardModel model = cfg.forward_model(cfg.surrogate.forward_order);
  const MultiIndexSet set = anchored_set(cfg.surrogate.budget, cfg.truncation);
  const SurrogateModel sm = fit_surrogate(
      ScalarEvaluator([&model](const std::vector<double>& y) { return model.far_field(y); }),
      set, cfg.truncation, cfg.surrogate.sampling, cfg.surrogate.q);
  out.write_json("surrogate.json", surrogate_to_json(sm));

  nlohmann::json summary = run_header(cfg);
  summary["command"] = "surrogate";
  summary["n_coefficients"] = set.size();
  summary["n_samples"] = sm.n_samples;
  summary["fit_residual"] = sm.residual;

  std::string decay = "dimension,slope,rho,r2,n_points\n";
  try {
    for (const DecayRate& r : decay_diagnostics(sm, cfg.surrogate.floor)) {
      decay += std::to_string(r.dimension) + "," + format_double(r.slope) + "," +
               format_double(r.rho) + "," + format_double(r.r2) + "," +
               std::to_string(r.n_points) + "\n";
    }
  } catch (const DomainError& e) {
    summary["decay_error"] = e.what();
  }
  out.write("decay.csv", decay);

  std::vector<int> ns;
  for (int n : cfg.surrogate.n_list) {
    if (static_cast<std::size_t>(n) <= set.size()) ns.push_back(n);
  }
  CurveCsv curve;
  curve.control_name = "n";
  for (const auto& [n, e] : best_n_term_curve(sm, ns)) curve.rows.emplace_back(n, e);
  curve.fitted_slope = curve.rows.size() >= 2 ? loglog_slope(curve.rows) : 0.0;
  out.write("error_curve.csv", curve.text());
  summary["best_n_term_slope"] = curve.fitted_slope;
  summary["artifacts"] = out.hashes();
  out.write_json("summary.json", summary);
  return summary;
}

std::vector<ComplexParamPoint> complex_samples(
    const std::vector<double>& polyradius, std::size_t n, std::uint64_t seed,
    const std::string& label) {
  auto rng = make_stream(seed, label);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<ComplexParamPoint> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<cplx> v(polyradius.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double r = 1 + u01(rng) * (polyradius[j] - 1);
      const cplx w = std::polar(r, 2 * kPi * u01(rng));
      v[j] = 0.5 * (w + 1.0 / w);
    }
    out.emplace_back(std::move(v), polyradius);
  }
  return out;
}

namespace {

Posterior make_posterior(const ExperimentConfig& cfg, const std::string& spec_path) {
  const std::string path = spec_path.empty() ? cfg.bayes.spec : spec_path;
  if (path.empty()) throw ConfigError("/bayes/spec", "no posterior spec given");
  std::ifstream in(path);
  if (!in) throw ConfigError("/bayes/spec", "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("/bayes/spec", std::string("invalid JSON: ") + e.what());
  }
  PosteriorSpec spec;
  try {
    spec = posterior_from_json(j);
  } catch (const DomainError& e) {
    throw ConfigError("/bayes/spec", e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("/bayes/spec", e.what());
  }
  ForwardConfig f = cfg.forward;
  f.quad.order = cfg.bayes.forward_order;
  f.variant = spec.variant;
  auto model = std::make_shared<const ObservationModel>(cfg.surface, cfg.wave, f,
                                                        spec.directions);
  return Posterior(std::move(spec), std::move(model));
}

}  // namespace

nlohmann::json run_holocheck(const ExperimentConfig& cfg,
                             const std::string& target, ArtifactWriter& out,
                             const std::string& spec_path) {
  if (cfg.truncation < 1) throw ConfigError("/truncation", "holocheck needs s >= 1");
  const std::vector<double> rho = cfg.polyradius();
  const ParametricSurface& surface = *cfg.surface;
  QuadConfig quad = cfg.forward.quad;
  quad.order = cfg.holocheck.forward_order;
  const Vec2 u(0.3, -0.2);
  HoloFn f;
  std::shared_ptr<const ForwardModel> model;
  std::shared_ptr<const Posterior> posterior;
  if (target == "gramian") {
    f = gramian_target(surface, 0, u);
  } else if (target == "normal") {
    f = normal_target(surface, 0, u);
  } else if (target == "slp" || target == "dlp") {
    f = operator_rows_target(surface, cfg.wave, quad,
                             target == "slp" ? OperatorKind::slp : OperatorKind::dlp,
                             cfg.holocheck.rows);
  } else if (target == "farfield") {
    model = std::make_shared<const ForwardModel>(
        cfg.forward_model(cfg.holocheck.forward_order));
    f = far_field_target(*model);
  } else if (target == "posterior") {
    posterior = std::make_shared<const Posterior>(make_posterior(cfg, spec_path));
    f = [posterior](const ComplexParamPoint& z) {
      VectorXc v(1);
      v(0) = posterior->density_extension(z);
      return v;
    };
  } else if (target == "control") {
    f = negative_control();
  } else {
    throw ConfigError("/target", "unknown holocheck target '" + target + "'");
  }

  HolomorphyReport scan =
      boundedness_scan(target, f, rho, cfg.holocheck.n_samples, cfg.seed);
  HolomorphyReport deriv = derivative_scan(target, f, rho, cfg.holocheck.n_points,
                                           cfg.seed, cfg.holocheck.step);
  HolomorphyReport r = scan;
  r.tolerances = cfg.holocheck.tolerances;
  r.derivative_residuals = deriv.derivative_residuals;
  r.radius_residual = deriv.radius_residual;
  r.n_derivative_checks = deriv.n_derivative_checks;
  r.violations += deriv.violations;
  for (const auto& s : deriv.failures) r.failures.push_back(s);
  r.update_verdict();
  nlohmann::json report = report_to_json(r);
  out.write_json("holocheck_" + target + ".json", report);
  return report;
}

nlohmann::json run_bayes(const ExperimentConfig& cfg,
                         const std::string& spec_path, ArtifactWriter& out) {
  const Posterior posterior = make_posterior(cfg, spec_path);
  IntegrationConfig ic = cfg.bayes.integration;
  const EvidenceResult r = evidence_and_mean(posterior, ic, cfg.bayes.qoi_order);
  nlohmann::json j = evidence_to_json(r);
  out.write_json("bayes.json", j);
  return j;
}

CurveCsv regularizer_study(const ParametricSurface& surface,
                           const WaveContext& ctx, const QuadConfig& quad,
                           const std::vector<int>& n_list,
                           const std::vector<ComplexParamPoint>& samples) {
  CurveCsv curve;
  curve.control_name = "n";
  for (int n : n_list) {
    double worst = 0;
    for (const auto& z : samples) {
      const DiscreteOperator d =
          assemble_regularization_defect(surface, ctx, z, quad, n, OperatorKind::slp);
      worst = std::max(worst, op_norms(d).l2);
    }
    curve.rows.emplace_back(n, worst);
  }
  curve.fitted_slope = loglog_slope(curve.rows);
  return curve;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg,
                                  const std::string& study,
                                  ArtifactWriter& out) {
  ConvergenceResult res;
  if (study == "regularizer") {
    QuadConfig quad = cfg.forward.quad;
    quad.order = cfg.convergence.regularizer_order;
    const auto samples =
        complex_samples(cfg.polyradius(),
                        static_cast<std::size_t>(cfg.convergence.regularizer_samples),
                        cfg.seed, "regularizer-samples");
    res.curve = regularizer_study(*cfg.surface, cfg.wave, quad,
                                  cfg.convergence.regularizer_n, samples);
    const double expected = quad.nu - 2;
    res.pass = res.curve.fitted_slope >= expected - 0.3 &&
               res.curve.fitted_slope <= expected + 0.3;
    res.criterion = "slope within 0.3 of nu - 2";
  } else if (study == "quadrature") {
    const cplx ref =
        cfg.forward_model(cfg.convergence.reference_order).far_field(cfg.y);
    res.curve.control_name = "order";
    for (int q : cfg.convergence.quadrature_orders) {
      const cplx v = cfg.forward_model(q).far_field(cfg.y);
      res.curve.rows.emplace_back(q, std::abs(v - ref) / std::abs(ref));
    }
    res.curve.fitted_slope = loglog_slope(res.curve.rows);
    res.pass = true;
    for (std::size_t k = 1; k < res.curve.rows.size(); ++k) {
      if (!(res.curve.rows[k].second < res.curve.rows[k - 1].second)) res.pass = false;
    }
    res.criterion = "error decreases monotonically with the order";
  } else if (study == "surrogate") {
    if (cfg.truncation < 1) throw ConfigError("/truncation", "surrogate needs s >= 1");
    const ForwardModel model = cfg.forward_model(cfg.surrogate.forward_order);
    const MultiIndexSet set = anchored_set(cfg.surrogate.budget, cfg.truncation);
    const SurrogateModel sm = fit_surrogate(
        ScalarEvaluator([&model](const std::vector<double>& y) { return model.far_field(y); }),
        set, cfg.truncation, cfg.surrogate.sampling, cfg.surrogate.q);
    std::vector<int> ns;
    for (int n : cfg.surrogate.n_list) {
      if (static_cast<std::size_t>(n) <= set.size()) ns.push_back(n);
    }
    res.curve.control_name = "n";
    for (const auto& [n, e] : best_n_term_curve(sm, ns)) res.curve.rows.emplace_back(n, e);
    res.curve.fitted_slope = loglog_slope(res.curve.rows);
    res.pass = res.curve.fitted_slope <= -0.9;
    res.criterion = "best-n-term slope <= -0.9";
  } else {
    throw ConfigError("/study", "unknown study '" + study + "'");
  }
  out.write("convergence_" + study + ".csv", res.curve.text());
  return res;
}

DiscreteOperator assemble_named(const ExperimentConfig& cfg,
                                const std::string& kind) {
  const ComplexParamPoint z = ComplexParamPoint::real(cfg.y);
  const auto& s = *cfg.surface;
  const auto& q = cfg.forward.quad;
  if (kind == "slp") return assemble_slp(s, cfg.wave, z, q);
  if (kind == "dlp") return assemble_dlp(s, cfg.wave, z, q);
  if (kind == "adjoint_dlp") return assemble_adjoint_dlp(s, cfg.wave, z, q);
  if (kind == "combined_direct") {
    return assemble_combined(s, cfg.wave, z, q, Variant::direct);
  }
  if (kind == "combined_indirect") {
    return assemble_combined(s, cfg.wave, z, q, Variant::indirect);
  }
  throw ConfigError("/kind", "unknown operator kind '" + kind + "'");
}

}  // namespace parabem
