#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "parabem/error.hpp"
#include "parabem/parallel.hpp"
#include "parabem/pipeline.hpp"

using namespace parabem;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_doc() {
  return {{"surface", {{"reference", "sphere"}, {"modes", {{"count", 2}, {"amplitude", 0.2}}}}},
          {"wave", {{"kappa", 1.0}}},
          {"quadrature", {{"order", 3}}},
          {"y", {0.3, -0.1}}};
}

std::string pointer_of(const nlohmann::json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<none>";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("parabem_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PARABEM_CLI) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("schema errors name the offending field") {
  nlohmann::json d = small_doc();
  d["wave"].erase("kappa");
  CHECK(pointer_of(d) == "/wave/kappa");

  d = small_doc();
  d.erase("surface");
  CHECK(pointer_of(d) == "/surface");

  d = small_doc();
  d["quadrature"]["order"] = "eight";
  CHECK(pointer_of(d) == "/quadrature/order");

  d = small_doc();
  d["variant"] = "hybrid";
  CHECK(pointer_of(d) == "/variant");

  d = small_doc();
  d["surface"]["colour"] = "red";
  CHECK(pointer_of(d) == "/surface/colour");

  d = small_doc();
  d["y"] = {0.1, 0.2, 0.3};
  CHECK(pointer_of(d) == "/y");

  d = small_doc();
  d["wave"]["kappa"] = -1.0;
  CHECK(pointer_of(d) == "/wave/kappa");

  CHECK(pointer_of(small_doc()) == "<none>");
}

TEST_CASE("defaults are filled from the schema") {
  const ExperimentConfig c = config_from_json(small_doc());
  CHECK(c.truncation == 2);
  CHECK(c.wave.eta == 1.0);
  CHECK(c.forward.quad.order == 3);
  CHECK(c.forward.variant == Variant::indirect);
  CHECK(c.document.contains("solver"));
  CHECK(c.document.contains("seed"));
  CHECK(c.y == std::vector<double>{0.3, -0.1});
  CHECK(c.polyradius().size() == 2);
  const nlohmann::json filled = apply_schema(small_doc(), experiment_schema());
  CHECK(apply_schema(filled, experiment_schema()) == filled);
}

TEST_CASE("shipped configs load") {
  const fs::path root(PARABEM_SOURCE_DIR);
  for (const char* name : {"sphere_s4.json", "bayes_s2.json"}) {
    CHECK_NOTHROW(load_config(root / "configs" / name));
  }
  CHECK_NOTHROW(posterior_from_json(
      nlohmann::json::parse(slurp(root / "configs" / "posterior_s2.json"))));
  CHECK_THROWS_AS(load_config(root / "configs" / "missing.json"), ConfigError);
}

TEST_CASE("text helpers") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-12) == "-2.5e-12");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  CHECK(json_text({{"a", 1}}) == "{\n  \"a\": 1\n}\n");

  CurveCsv c;
  c.control_name = "n";
  c.rows = {{2, 0.25}, {4, 0.0625}};
  c.fitted_slope = loglog_slope(c.rows);
  CHECK(std::abs(c.fitted_slope + 2) < 1e-14);
  CHECK(c.text() == "n,error\n2,0.25\n4,0.0625\nfitted_slope,-2\n");
  CHECK_THROWS_AS(loglog_slope({{1, 1.0}}), DomainError);
}

TEST_CASE("pipeline summaries are byte identical across runs and thread counts") {
  const ExperimentConfig cfg = config_from_json(small_doc());
  std::vector<std::string> summaries;
  std::vector<std::string> densities;
  for (int threads : {1, 3, 1}) {
    set_threads(threads);
    ArtifactWriter w(scratch("pipe" + std::to_string(summaries.size())));
    const nlohmann::json s = run_pipeline(cfg, w);
    CHECK(s.contains("u_inf_re"));
    CHECK(s.contains("residual"));
    CHECK(s.contains("cond_est"));
    summaries.push_back(slurp(w.dir() / "summary.json"));
    densities.push_back(slurp(w.dir() / "density.csv"));
    CHECK(sha256_hex(densities.back()) == w.hashes().at("density.csv"));
    fs::remove_all(w.dir());
  }
  set_threads(1);
  CHECK(summaries[0] == summaries[1]);
  CHECK(summaries[0] == summaries[2]);
  CHECK(densities[0] == densities[1]);
}

TEST_CASE("cli exit codes and outputs") {
  const fs::path dir = scratch("cli");
  const fs::path cfg = dir / "exp.json";
  {
    std::ofstream(cfg) << small_doc().dump();
  }
  const std::string common = "--config " + cfg.string() + " --out " + (dir / "out").string();

  const RunResult ok = run_cli("solve " + common + " --y 0.1,0.2 --variant direct");
  CHECK(ok.code == 0);
  const nlohmann::json j = nlohmann::json::parse(ok.out);
  for (const char* k : {"u_inf_re", "u_inf_im", "residual", "cond_est"}) CHECK(j.contains(k));
  CHECK(fs::exists(dir / "out" / "summary.json"));

  const RunResult ctl = run_cli("holocheck " + common + " --target control");
  CHECK(ctl.code == 2);
  CHECK(nlohmann::json::parse(ctl.out).at("verdict") == "fail");

  CHECK(run_cli("solve --config " + (dir / "nope.json").string()).code == 1);
  CHECK(run_cli("solve " + common + " --variant hybrid").code == 1);
  CHECK(run_cli("solve " + common + " --y 0.1,0.2,0.3").code == 1);
  CHECK(run_cli("frobnicate").code == 1);

  const RunResult dump = run_cli("dump-operator " + common + " --kind slp");
  CHECK(dump.code == 0);
  const nlohmann::json d = nlohmann::json::parse(dump.out);
  CHECK(d.at("l2").get<double>() <= std::sqrt(d.at("l1").get<double>() * d.at("linf").get<double>()) + 1e-12);
  fs::remove_all(dir);
}
