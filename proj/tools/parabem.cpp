#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "parabem/config.hpp"
#include "parabem/error.hpp"
#include "parabem/parallel.hpp"
#include "parabem/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int threads = 0;
  std::string y;
  std::string variant;
  std::string target = "farfield";
  std::string spec;
  std::string study = "regularizer";
  std::string kind = "combined_indirect";
  int angles = 37;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw parabem::ConfigError("/y", "cannot parse '" + item + "' as a number");
    }
  }
  return v;
}

parabem::ExperimentConfig load(const Options& o) {
  std::ifstream in(o.config);
  if (!in) throw parabem::ConfigError("", "cannot open config file " + o.config);
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw parabem::ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!raw.is_object()) throw parabem::ConfigError("", "config must be an object");
  if (!o.y.empty()) raw["y"] = parse_list(o.y);
  if (!o.variant.empty()) raw["variant"] = o.variant;
  if (o.seed >= 0) raw["seed"] = o.seed;
  if (o.threads > 0) raw["threads"] = o.threads;
  if (!o.out.empty()) raw["output"] = o.out;
  parabem::ExperimentConfig cfg = parabem::config_from_json(raw);
  parabem::set_threads(cfg.threads);
  return cfg;
}

void emit(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int run(const std::string& cmd, const Options& o) {
  const parabem::ExperimentConfig cfg = load(o);
  parabem::ArtifactWriter out(cfg.output);
  if (cmd == "solve") {
    emit(parabem::run_pipeline(cfg, out));
    return 0;
  }
  if (cmd == "farfield") {
    emit(parabem::run_farfield(cfg, out, o.angles));
    return 0;
  }
  if (cmd == "surrogate") {
    const nlohmann::json j = parabem::run_surrogate(cfg, out);
    emit(j);
    return j.contains("decay_error") ? 2 : 0;
  }
  if (cmd == "holocheck") {
    const nlohmann::json j = parabem::run_holocheck(cfg, o.target, out, o.spec);
    emit(j);
    return j.at("verdict") == "pass" ? 0 : 2;
  }
  if (cmd == "bayes") {
    emit(parabem::run_bayes(cfg, o.spec, out));
    return 0;
  }
  if (cmd == "convergence") {
    const parabem::ConvergenceResult r = parabem::run_convergence(cfg, o.study, out);
    emit({{"study", o.study},
          {"fitted_slope", r.curve.fitted_slope},
          {"criterion", r.criterion},
          {"pass", r.pass},
          {"artifacts", out.hashes()}});
    return r.pass ? 0 : 2;
  }
  if (cmd == "dump-operator") {
    const parabem::DiscreteOperator op = parabem::assemble_named(cfg, o.kind);
    const auto path = out.dir() / ("operator_" + o.kind + ".bin");
    parabem::save_operator(op, path);
    std::ifstream f(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const parabem::OperatorNorms n = parabem::op_norms(op);
    emit({{"kind", o.kind},
          {"n", op.size()},
          {"file", path.filename().string()},
          {"sha256", parabem::sha256_hex(bytes)},
          {"l1", n.l1},
          {"l2", n.l2},
          {"linf", n.linf}});
    return 0;
  }
  throw parabem::Error("unknown subcommand " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric boundary element scattering experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "root seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* solve = app.add_subcommand("solve", "density and far field at one parameter point");
  common(solve);
  solve->add_option("--y", o.y, "comma separated parameter values");
  solve->add_option("--variant", o.variant)->check(CLI::IsMember({"direct", "indirect"}));

  auto* farfield = app.add_subcommand("farfield", "far-field pattern over observation angles");
  common(farfield);
  farfield->add_option("--y", o.y);
  farfield->add_option("--variant", o.variant)->check(CLI::IsMember({"direct", "indirect"}));
  farfield->add_option("--angles", o.angles)->check(CLI::Range(2, 100000));

  auto* surrogate = app.add_subcommand("surrogate", "Legendre surrogate of the far field");
  common(surrogate);

  auto* holo = app.add_subcommand("holocheck", "numerical holomorphy checks");
  common(holo);
  holo->add_option("--target", o.target)
      ->check(CLI::IsMember({"gramian", "normal", "slp", "dlp", "farfield", "posterior", "control"}));
  holo->add_option("--spec", o.spec, "posterior JSON for --target posterior");

  auto* bayes = app.add_subcommand("bayes", "evidence and posterior mean");
  common(bayes);
  bayes->add_option("--spec", o.spec, "posterior JSON");

  auto* conv = app.add_subcommand("convergence", "convergence study");
  common(conv);
  conv->add_option("--study", o.study)
      ->check(CLI::IsMember({"regularizer", "quadrature", "surrogate"}));

  auto* dump = app.add_subcommand("dump-operator", "binary dump of an assembled operator");
  common(dump);
  dump->add_option("--y", o.y);
  dump->add_option("--kind", o.kind)
      ->check(CLI::IsMember({"slp", "dlp", "adjoint_dlp", "combined_direct", "combined_indirect"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const parabem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
