#include "parabem/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "parabem/error.hpp"
#include "parabem/parallel.hpp"
#include "parabem/quadrature.hpp"
#include "parabem/rng.hpp"

namespace parabem {

void PosteriorSpec::validate() const {
  if (directions.empty()) throw DomainError("posterior needs at least one direction pair");
  const auto m = static_cast<Eigen::Index>(2 * directions.size());
  if (observations.size() != m) {
    throw DomainError("observation length must be 2 x number of direction pairs");
  }
  if (covariance.rows() != m || covariance.cols() != m) {
    throw DomainError("covariance must be square with the observation length");
  }
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    throw DomainError("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance,
                                                    Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0)) {
    throw DomainError("covariance must be positive definite");
  }
  for (const auto& d : directions) {
    if (std::abs(d.d_inc.norm() - 1) > 1e-12 || std::abs(d.d_obs.norm() - 1) > 1e-12) {
      throw DomainError("directions must be unit vectors");
    }
  }
}

namespace {

Vec3 unit_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DomainError("direction must have three entries");
  Vec3 d(v[0], v[1], v[2]);
  if (!(d.norm() > 0)) throw DomainError("direction must be nonzero");
  return d / d.norm();
}

}  // namespace

PosteriorSpec posterior_from_json(const nlohmann::json& j) {
  PosteriorSpec s;
  for (const auto& d : j.at("directions")) {
    DirectionPair p;
    p.d_inc = unit_vec(d.at("d_inc"));
    p.d_obs = unit_vec(d.at("d_obs"));
    s.directions.push_back(p);
  }
  const auto obs = j.at("observations").get<std::vector<double>>();
  s.observations = Eigen::Map<const Eigen::VectorXd>(
      obs.data(), static_cast<Eigen::Index>(obs.size()));
  const auto cov = j.at("covariance").get<std::vector<std::vector<double>>>();
  s.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                      static_cast<Eigen::Index>(cov.size()));
  for (std::size_t r = 0; r < cov.size(); ++r) {
    if (cov[r].size() != cov.size()) throw DomainError("covariance must be square");
    for (std::size_t c = 0; c < cov.size(); ++c) {
      s.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cov[r][c];
    }
  }
  s.variant = variant_from_string(j.value("variant", std::string("indirect")));
  s.zero_precision = j.value("zero_precision", false);
  s.log_space = j.value("log_space", false);
  s.validate();
  return s;
}

nlohmann::json posterior_to_json(const PosteriorSpec& spec) {
  nlohmann::json j;
  j["observations"] = std::vector<double>(
      spec.observations.data(), spec.observations.data() + spec.observations.size());
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < spec.covariance.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(spec.covariance.cols()));
    for (Eigen::Index c = 0; c < spec.covariance.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = spec.covariance(r, c);
    }
    cov.push_back(row);
  }
  j["covariance"] = cov;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : spec.directions) {
    dirs.push_back({{"d_inc", {d.d_inc(0), d.d_inc(1), d.d_inc(2)}},
                    {"d_obs", {d.d_obs(0), d.d_obs(1), d.d_obs(2)}}});
  }
  j["directions"] = dirs;
  j["variant"] = to_string(spec.variant);
  j["zero_precision"] = spec.zero_precision;
  j["log_space"] = spec.log_space;
  return j;
}

ObservationModel::ObservationModel(
    std::shared_ptr<const ParametricSurface> surface, WaveContext ctx,
    ForwardConfig cfg, std::vector<DirectionPair> directions)
    : surface_(std::move(surface)),
      ctx_(ctx),
      cfg_(std::move(cfg)),
      directions_(std::move(directions)) {
  if (directions_.empty()) throw DomainError("observation model needs directions");
  ctx_.validate();
  if (cfg_.reuse_rules && cfg_.quad.path == "duffy") {
    plan_ = make_assembly_plan(*surface_, cfg_.quad);
  }
}

VectorXc ObservationModel::far_fields(const ComplexParamPoint& z) const {
  const DiscreteOperator A =
      assemble_combined(*surface_, ctx_, z, cfg_.quad, cfg_.variant, plan_.get());
  VectorXc out(static_cast<Eigen::Index>(directions_.size()));
  std::vector<bool> done(directions_.size(), false);
  for (std::size_t k = 0; k < directions_.size(); ++k) {
    if (done[k]) continue;
    WaveContext c = ctx_;
    c.d_inc = directions_[k].d_inc;
    const DensitySolution sol = solve(A, rhs(*A.geometry, c, cfg_.variant), cfg_.solver);
    for (std::size_t l = k; l < directions_.size(); ++l) {
      if (done[l] || directions_[l].d_inc != directions_[k].d_inc) continue;
      out(static_cast<Eigen::Index>(l)) =
          far_field(sol, directions_[l].d_obs, cfg_.convention);
      done[l] = true;
    }
  }
  return out;
}

Eigen::VectorXd ObservationModel::observe(const std::vector<double>& y) const {
  std::vector<long long> key(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) key[k] = std::llround(y[k] * 1e12);
  while (!key.empty() && key.back() == 0) key.pop_back();
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const VectorXc u = far_fields(ComplexParamPoint::real(y));
  Eigen::VectorXd obs(2 * u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    obs(2 * k) = u(k).real();
    obs(2 * k + 1) = u(k).imag();
  }
  std::lock_guard lock(mutex_);
  ++n_evals_;
  cache_[key] = obs;
  return obs;
}

VectorXc ObservationModel::observe_extension(const ComplexParamPoint& z) const {
  z.check_admissible();
  const VectorXc u = far_fields(z);
  const VectorXc uc = far_fields(z.conj()).conjugate();
  VectorXc obs(2 * u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    obs(2 * k) = 0.5 * (u(k) + uc(k));
    obs(2 * k + 1) = (u(k) - uc(k)) / (2.0 * kI);
  }
  return obs;
}

std::size_t ObservationModel::n_evals() const {
  std::lock_guard lock(mutex_);
  return n_evals_;
}

std::size_t ObservationModel::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

Eigen::VectorXd observe(std::shared_ptr<const ParametricSurface> surface,
                        const WaveContext& ctx, const ForwardConfig& cfg,
                        const std::vector<DirectionPair>& directions,
                        const std::vector<double>& y) {
  return ObservationModel(std::move(surface), ctx, cfg, directions).observe(y);
}

namespace {

template <typename Vec>
auto quadratic_form(const PosteriorSpec& spec, const Vec& prediction) {
  using Scalar = typename Vec::Scalar;
  if (prediction.size() != spec.observations.size()) {
    throw DomainError("prediction length does not match observations");
  }
  if (spec.zero_precision) return Scalar(0);
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success) {
    throw SolveError("covariance Cholesky factorization failed", 0);
  }
  const Vec r = spec.observations.template cast<Scalar>() - prediction;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> L =
      llt.matrixL().toDenseMatrix().template cast<Scalar>();
  const Vec w = L.template triangularView<Eigen::Lower>().solve(r);
  return Scalar(0.5) * (w.transpose() * w).value();
}

}  // namespace

double potential(const PosteriorSpec& spec, const Eigen::VectorXd& prediction) {
  return quadratic_form(spec, prediction);
}

cplx potential(const PosteriorSpec& spec, const VectorXc& prediction) {
  return quadratic_form(spec, prediction);
}

Posterior::Posterior(PosteriorSpec spec,
                     std::shared_ptr<const ObservationModel> model)
    : spec_(std::move(spec)), model_(std::move(model)) {
  spec_.validate();
  if (model_->n_outputs() != static_cast<std::size_t>(spec_.observations.size())) {
    throw DomainError("observation model and posterior spec disagree in size");
  }
}

double Posterior::potential(const std::vector<double>& y) const {
  if (spec_.zero_precision) return 0;
  return parabem::potential(spec_, model_->observe(y));
}

double Posterior::density(const std::vector<double>& y) const {
  return std::exp(-potential(y));
}

double Posterior::log_density(const std::vector<double>& y) const {
  return -potential(y);
}

cplx Posterior::density_extension(const ComplexParamPoint& z) const {
  if (spec_.zero_precision) return 1;
  return std::exp(-parabem::potential(spec_, model_->observe_extension(z)));
}

IntegrationConfig integration_from_json(const nlohmann::json& j) {
  IntegrationConfig c;
  c.method = j.value("method", c.method);
  c.gauss_points = j.value("gauss_points", c.gauss_points);
  c.n_points = j.value("n_points", c.n_points);
  c.seed = j.value("seed", c.seed);
  if (c.method != "gauss" && c.method != "qmc" && c.method != "mc") {
    throw DomainError("integration method must be gauss|qmc|mc");
  }
  return c;
}

std::uint64_t next_prime(std::uint64_t n) {
  auto is_prime = [](std::uint64_t m) {
    if (m < 2) return false;
    for (std::uint64_t d = 2; d * d <= m; ++d) {
      if (m % d == 0) return false;
    }
    return true;
  };
  while (!is_prime(n)) ++n;
  return n;
}

std::vector<std::uint64_t> cbc_lattice(std::uint64_t n, int s) {
  if (n < 2) throw DomainError("lattice needs at least two points");
  const double c = 2 * kPi * kPi;
  // omega[k] = 2 pi^2 B_2(k/n)
  std::vector<double> omega(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(n);
    omega[k] = c * (x * x - x + 1.0 / 6.0);
  }
  std::vector<double> prod(n, 1.0);
  std::vector<std::uint64_t> z;
  for (int j = 1; j <= s; ++j) {
    const double gamma = 1.0 / (static_cast<double>(j) * j);
    std::uint64_t best = 1;
    double best_err = std::numeric_limits<double>::infinity();
    const std::uint64_t top = j == 1 ? 1 : n / 2;
    for (std::uint64_t cand = 1; cand <= top; ++cand) {
      if (std::gcd(cand, n) != 1) continue;
      double e = 0;
      std::uint64_t idx = 0;
      for (std::uint64_t k = 0; k < n; ++k) {
        e += prod[k] * (1 + gamma * omega[idx]);
        idx += cand;
        if (idx >= n) idx -= n;
      }
      if (e < best_err) {
        best_err = e;
        best = cand;
      }
    }
    z.push_back(best);
    std::uint64_t idx = 0;
    for (std::uint64_t k = 0; k < n; ++k) {
      prod[k] *= 1 + gamma * omega[idx];
      idx += best;
      if (idx >= n) idx -= n;
    }
  }
  return z;
}

ParameterRule parameter_rule(int s, const IntegrationConfig& cfg) {
  if (s < 1) throw DomainError("parameter dimension must be >= 1");
  ParameterRule rule;
  rule.method = cfg.method;
  const auto us = static_cast<std::size_t>(s);
  if (cfg.method == "gauss") {
    if (s > 3) throw DomainError("tensor Gauss evidence needs s <= 3");
    if (cfg.gauss_points < 1) throw DomainError("gauss_points must be >= 1");
    const GaussLegendre& g = gauss_legendre(cfg.gauss_points);
    const auto q = static_cast<std::size_t>(cfg.gauss_points);
    std::size_t total = 1;
    for (int k = 0; k < s; ++k) total *= q;
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::vector<double> p(us);
      double w = 1;
      std::size_t rem = idx;
      for (std::size_t k = 0; k < us; ++k) {
        p[k] = g.nodes[rem % q];
        w *= 0.5 * g.weights[rem % q];
        rem /= q;
      }
      rule.points.push_back(std::move(p));
      rule.weights.push_back(w);
    }
  } else if (cfg.method == "qmc") {
    const std::uint64_t n = next_prime(std::max<std::size_t>(cfg.n_points, 2));
    const auto z = cbc_lattice(n, s);
    auto rng = make_stream(cfg.seed, "qmc-shift");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> shift(us);
    for (auto& v : shift) v = u01(rng);
    for (std::uint64_t k = 0; k < n; ++k) {
      std::vector<double> p(us);
      for (std::size_t j = 0; j < us; ++j) {
        double x = static_cast<double>((k * z[j]) % n) / static_cast<double>(n) + shift[j];
        x -= std::floor(x);
        const double tent = 1 - std::abs(2 * x - 1);
        p[j] = 2 * tent - 1;
      }
      rule.points.push_back(std::move(p));
      rule.weights.push_back(1.0 / static_cast<double>(n));
    }
  } else if (cfg.method == "mc") {
    if (cfg.n_points < 1) throw DomainError("n_points must be >= 1");
    auto rng = make_stream(cfg.seed, "mc-evidence");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t k = 0; k < cfg.n_points; ++k) {
      std::vector<double> p(us);
      for (auto& v : p) v = u(rng);
      rule.points.push_back(std::move(p));
      rule.weights.push_back(1.0 / static_cast<double>(cfg.n_points));
    }
  } else {
    throw DomainError("integration method must be gauss|qmc|mc");
  }
  return rule;
}

EvidenceResult evidence_and_mean(const LogDensityFn& log_density, int s,
                                 const IntegrationConfig& cfg,
                                 const QoIFn& qoi, bool log_space) {
  const ParameterRule rule = parameter_rule(s, cfg);
  const std::size_t n = rule.points.size();
  std::vector<double> logs(n);
  std::vector<std::vector<Vec3>> q(qoi ? n : 0);
  parallel_for(n, [&](std::size_t k) {
    logs[k] = log_density(rule.points[k]);
    if (qoi) q[k] = qoi(rule.points[k]);
  });
  EvidenceResult r;
  r.method = rule.method;
  r.n_points = n;
  double shift = 0;
  if (log_space) {
    shift = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(shift)) throw DomainError("log-density is not finite");
  }
  std::vector<double> a(n);
  double sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = rule.weights[k] * std::exp(logs[k] - shift);
    sum += a[k];
  }
  r.log_Z = std::log(sum) + shift;
  r.Z = std::exp(r.log_Z);
  if (!log_space && !(sum >= 1e-300)) {
    std::ostringstream os;
    os << "evidence underflow (Z = " << sum
       << " < 1e-300); use log-space mode";
    throw DomainError(os.str());
  }
  if (!(sum > 0)) throw DomainError("evidence is not positive");
  r.mean_y.assign(static_cast<std::size_t>(s), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = a[k] / sum;
    for (std::size_t j = 0; j < r.mean_y.size(); ++j) r.mean_y[j] += w * rule.points[k][j];
    if (qoi) {
      if (r.mean_qoi.empty()) r.mean_qoi.assign(q[k].size(), Vec3::Zero());
      for (std::size_t i = 0; i < q[k].size(); ++i) r.mean_qoi[i] += w * q[k][i];
    }
  }
  return r;
}

EvidenceResult evidence_and_mean(const Posterior& posterior,
                                 const IntegrationConfig& cfg, int qoi_order) {
  const ParametricSurface& surface = posterior.model().surface();
  const int s = static_cast<int>(surface.truncation());
  const std::vector<Node> nodes =
      discretize(surface, ComplexParamPoint::real(std::vector<double>(s, 0.0)),
                 qoi_order)
          .nodes;
  const QoIFn qoi = [&surface, &nodes](const std::vector<double>& y) {
    const ComplexParamPoint z = ComplexParamPoint::real(y);
    std::vector<Vec3> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      out[i] = eval_surface(surface, z, nodes[i].patch, nodes[i].u).real();
    }
    return out;
  };
  const std::size_t before = posterior.model().n_evals();
  EvidenceResult r = evidence_and_mean(
      [&posterior](const std::vector<double>& y) { return posterior.log_density(y); },
      s, cfg, qoi, posterior.spec().log_space);
  r.qoi_nodes = nodes;
  r.n_evals = posterior.model().n_evals() - before;
  return r;
}

nlohmann::json evidence_to_json(const EvidenceResult& r) {
  nlohmann::json j;
  j["Z"] = r.Z;
  j["log_Z"] = r.log_Z;
  j["method"] = r.method;
  j["n_points"] = r.n_points;
  j["n_evals"] = r.n_evals;
  j["mean_y"] = r.mean_y;
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < r.mean_qoi.size(); ++i) {
    nlohmann::json e;
    if (i < r.qoi_nodes.size()) {
      e["patch"] = r.qoi_nodes[i].patch;
      e["u"] = {r.qoi_nodes[i].u(0), r.qoi_nodes[i].u(1)};
    }
    e["r"] = {r.mean_qoi[i](0), r.mean_qoi[i](1), r.mean_qoi[i](2)};
    nodes.push_back(e);
  }
  j["mean_qoi_nodes"] = nodes;
  return j;
}

}  // namespace parabem
