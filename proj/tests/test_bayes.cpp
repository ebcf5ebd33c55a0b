#include <doctest.h>

#include <cmath>

#include "parabem/bayes.hpp"
#include "parabem/error.hpp"

using namespace parabem;

namespace {

// int_{-1}^{1} exp(-a t^2) dt / 2
double gauss_bump_mass(double a) {
  return std::sqrt(kPi) * std::erf(std::sqrt(a)) / (2 * std::sqrt(a));
}

// Mean of t under exp(c t) dt on [-1,1].
double tilted_mean(double c) { return 1 / std::tanh(c) - 1 / c; }

std::shared_ptr<const ParametricSurface> two_mode_surface() {
  static auto s = std::make_shared<const ParametricSurface>(surface_from_json(
      {{"reference", "sphere"}, {"modes", {{"count", 2}, {"amplitude", 0.3}}}}));
  return s;
}

std::vector<DirectionPair> two_pairs() {
  DirectionPair a;
  DirectionPair b;
  b.d_obs = Vec3(1, 0, 0);
  return {a, b};
}

ForwardConfig order(int q) {
  ForwardConfig c;
  c.quad.order = q;
  return c;
}

PosteriorSpec diagonal_spec(const Eigen::VectorXd& obs, double var) {
  PosteriorSpec s;
  s.observations = obs;
  s.covariance = var * Eigen::MatrixXd::Identity(obs.size(), obs.size());
  s.directions = two_pairs();
  return s;
}

}  // namespace

TEST_CASE("potential is the weighted misfit") {
  PosteriorSpec s = diagonal_spec(Eigen::Vector4d(1, 2, 3, 4), 1.0);
  s.covariance.diagonal() << 2, 1, 4, 0.5;
  const Eigen::VectorXd pred = Eigen::Vector4d(0, 2, 1, 5);
  const double ref = 0.5 * (1.0 / 2 + 0 + 4.0 / 4 + 1.0 / 0.5);
  CHECK(std::abs(potential(s, pred) - ref) < 1e-15);
  CHECK(std::abs(potential(s, VectorXc(pred.cast<cplx>())) - ref) < 1e-15);
  s.zero_precision = true;
  CHECK(potential(s, pred) == 0.0);
}

TEST_CASE("posterior spec validation") {
  PosteriorSpec s = diagonal_spec(Eigen::Vector4d(1, 2, 3, 4), 1e-2);
  CHECK_NOTHROW(s.validate());
  PosteriorSpec a = s;
  a.covariance(0, 1) = 0.5;
  CHECK_THROWS_AS(a.validate(), DomainError);
  PosteriorSpec b = s;
  b.covariance(2, 2) = -1;
  CHECK_THROWS_AS(b.validate(), DomainError);
  PosteriorSpec c = s;
  c.directions.pop_back();
  CHECK_THROWS_AS(c.validate(), DomainError);

  const PosteriorSpec r = posterior_from_json(posterior_to_json(s));
  CHECK(r.observations == s.observations);
  CHECK(r.covariance == s.covariance);
  CHECK(r.directions.size() == 2);
  CHECK(r.directions[1].d_obs == Vec3(1, 0, 0));
  CHECK(posterior_to_json(r).dump() == posterior_to_json(s).dump());
}

TEST_CASE("evidence of separable analytic densities") {
  const LogDensityFn ld = [](const std::vector<double>& y) {
    return -0.7 * y[0] * y[0] - 2.0 * y[1] * y[1];
  };
  IntegrationConfig g;
  g.gauss_points = 20;
  const EvidenceResult r = evidence_and_mean(ld, 2, g);
  CHECK(std::abs(r.Z - gauss_bump_mass(0.7) * gauss_bump_mass(2.0)) < 1e-12);
  CHECK(std::abs(r.mean_y[0]) < 1e-15);
  CHECK(r.n_points == 400);
  CHECK(r.Z > 0);

  const LogDensityFn tilt = [](const std::vector<double>& y) { return 1.5 * y[0] - 0.4 * y[1]; };
  const EvidenceResult t = evidence_and_mean(tilt, 2, g);
  CHECK(std::abs(t.mean_y[0] - tilted_mean(1.5)) < 1e-12);
  CHECK(std::abs(t.mean_y[1] - tilted_mean(-0.4)) < 1e-12);
  CHECK(std::abs(t.Z - std::sinh(1.5) / 1.5 * std::sinh(0.4) / 0.4) < 1e-12);
}

TEST_CASE("gauss and lattice rules agree on a smooth toy posterior") {
  const LogDensityFn ld = [](const std::vector<double>& y) {
    const double a = y[0] - 0.3, b = y[1] + 0.2;
    return -(a * a + 0.5 * a * b + b * b) / 0.8;
  };
  IntegrationConfig g;
  g.gauss_points = 20;
  IntegrationConfig q;
  q.method = "qmc";
  q.n_points = 10000;
  const EvidenceResult rg = evidence_and_mean(ld, 2, g);
  const EvidenceResult rq = evidence_and_mean(ld, 2, q);
  CHECK(rq.n_points == 10007);
  CHECK(std::abs(rg.Z - rq.Z) / rg.Z < 1e-3);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(rg.mean_y[j] - rq.mean_y[j]) < 1e-3);
  }
  IntegrationConfig m;
  m.method = "mc";
  m.n_points = 20000;
  CHECK(std::abs(evidence_and_mean(ld, 2, m).Z - rg.Z) / rg.Z < 3e-2);
}

TEST_CASE("lattice construction") {
  CHECK(next_prime(10000) == 10007);
  CHECK(next_prime(2) == 2);
  CHECK(next_prime(24) == 29);
  const std::vector<std::uint64_t> z = cbc_lattice(101, 3);
  REQUIRE(z.size() == 3);
  CHECK(z[0] == 1);
  for (std::uint64_t v : z) {
    CHECK(v >= 1);
    CHECK(v < 101);
  }
  IntegrationConfig q;
  q.method = "qmc";
  q.n_points = 50;
  const ParameterRule r = parameter_rule(3, q);
  CHECK(r.points.size() == 53);
  double w = 0;
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    w += r.weights[k];
    for (double v : r.points[k]) {
      CHECK(v >= -1);
      CHECK(v <= 1);
    }
  }
  CHECK(std::abs(w - 1) < 1e-14);
  IntegrationConfig g;
  CHECK_THROWS_AS(parameter_rule(4, g), DomainError);
}

TEST_CASE("underflowing evidence needs log space") {
  const LogDensityFn ld = [](const std::vector<double>& y) { return -1000.0 - y[0] * y[0]; };
  IntegrationConfig g;
  CHECK_THROWS_AS(evidence_and_mean(ld, 1, g), DomainError);
  const EvidenceResult r = evidence_and_mean(ld, 1, g, {}, true);
  CHECK(std::abs(r.log_Z - (-1000.0 + std::log(gauss_bump_mass(1.0)))) < 1e-10);
}

TEST_CASE("zero precision recovers the prior") {
  auto model = std::make_shared<ObservationModel>(two_mode_surface(), WaveContext{}, order(3),
                                                  two_pairs());
  PosteriorSpec s = diagonal_spec(Eigen::Vector4d::Zero(), 1.0);
  s.zero_precision = true;
  const Posterior p(s, model);
  IntegrationConfig g;
  g.gauss_points = 4;
  const EvidenceResult r = evidence_and_mean(p, g, 2);
  CHECK(std::abs(r.Z - 1) < 1e-14);
  CHECK(r.n_evals == 0);
  for (double m : r.mean_y) CHECK(std::abs(m) < 1e-15);
  REQUIRE(r.mean_qoi.size() == r.qoi_nodes.size());
  for (std::size_t i = 0; i < r.qoi_nodes.size(); ++i) {
    const Vec3 ref =
        eval_surface(*two_mode_surface(), ComplexParamPoint::real({0, 0}), r.qoi_nodes[i].patch,
                     r.qoi_nodes[i].u)
            .real();
    CHECK((r.mean_qoi[i] - ref).norm() < 1e-14);
  }
  const nlohmann::json j = evidence_to_json(r);
  CHECK(j.at("method") == "gauss");
  CHECK(j.at("mean_qoi_nodes").size() == r.qoi_nodes.size());
}

TEST_CASE("observation model caching and extension") {
  ObservationModel m(two_mode_surface(), WaveContext{}, order(3), two_pairs());
  const Eigen::VectorXd a = m.observe({0.2, -0.5});
  const Eigen::VectorXd b = m.observe({0.2, -0.5});
  CHECK(m.n_evals() == 1);
  CHECK(m.cache_size() == 1);
  CHECK(a == b);
  const VectorXc ext = m.observe_extension(ComplexParamPoint::real({0.2, -0.5}));
  CHECK((ext.real() - a).norm() < 1e-14);
  CHECK(ext.imag().norm() < 1e-14);
  const VectorXc ff = m.far_fields(ComplexParamPoint::real({0.2, -0.5}));
  CHECK(std::abs(ff(1).real() - a(2)) < 1e-15);
  CHECK(std::abs(ff(1).imag() - a(3)) < 1e-15);
}

TEST_CASE("synthetic inversion concentrates as the noise shrinks") {
  std::vector<DirectionPair> pairs;
  for (const Vec3& d : {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0),
                        Vec3(0, 0, 1), Vec3(0, 0, -1)}) {
    DirectionPair p;
    p.d_obs = d;
    pairs.push_back(p);
  }
  WaveContext ctx;
  ctx.kappa = 2;
  ctx.eta = 2;
  auto model = std::make_shared<ObservationModel>(two_mode_surface(), ctx, order(3), pairs);
  const std::vector<double> truth{0.4, -0.3};
  const Eigen::VectorXd obs = model->observe(truth);
  IntegrationConfig g;
  g.gauss_points = 20;
  double prev_spread = 1e300, prev_err = 1e300;
  // Noise levels the 20-point grid still resolves.
  for (double var : {1e-1, 1e-2, 1e-3, 1e-4}) {
    PosteriorSpec s;
    s.observations = obs;
    s.covariance = var * Eigen::MatrixXd::Identity(obs.size(), obs.size());
    s.directions = pairs;
    s.log_space = true;
    const Posterior p(s, model);
    const QoIFn second = [](const std::vector<double>& y) {
      return std::vector<Vec3>{Vec3(y[0] * y[0], y[1] * y[1], 0)};
    };
    const EvidenceResult r = evidence_and_mean(
        [&p](const std::vector<double>& y) { return p.log_density(y); }, 2, g, second, true);
    const double spread = r.mean_qoi[0](0) - r.mean_y[0] * r.mean_y[0] + r.mean_qoi[0](1) -
                          r.mean_y[1] * r.mean_y[1];
    const double err = std::hypot(r.mean_y[0] - truth[0], r.mean_y[1] - truth[1]);
    CHECK(spread < prev_spread);
    CHECK(err < prev_err);
    prev_spread = spread;
    prev_err = err;
  }
  CHECK(prev_err < 0.02);
  CHECK(prev_spread < 0.05);
}
