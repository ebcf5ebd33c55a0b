#include "parabem/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "parabem/error.hpp"
#include "parabem/parallel.hpp"
#include "parabem/quadrature.hpp"
#include "parabem/rng.hpp"

namespace parabem {

Normalization normalization_from_string(const std::string& s) {
  if (s == "2" || s == "l2") return Normalization::l2;
  if (s == "inf" || s == "linf") return Normalization::linf;
  throw DomainError("normalization must be 2 or inf");
}

const char* to_string(Normalization q) {
  return q == Normalization::l2 ? "2" : "inf";
}

std::vector<double> legendre_all(int n, Normalization q, double x) {
  if (std::abs(x) > 1 + 1e-14) throw DomainError("Legendre argument outside [-1,1]");
  if (n < 0) throw DomainError("Legendre degree must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(n + 1));
  p[0] = 1;
  if (n >= 1) p[1] = x;
  for (int k = 2; k <= n; ++k) {
    p[k] = ((2 * k - 1) * x * p[k - 1] - (k - 1) * p[k - 2]) / k;
  }
  if (q == Normalization::l2) {
    for (int k = 0; k <= n; ++k) p[k] *= std::sqrt(2.0 * k + 1);
  }
  return p;
}

double legendre_eval(int n, Normalization q, double x) {
  return legendre_all(n, q, x).back();
}

MultiIndex trim(MultiIndex nu) {
  while (!nu.empty() && nu.back() == 0) nu.pop_back();
  return nu;
}

std::size_t MultiIndexSet::dimension() const {
  std::size_t d = 0;
  for (const auto& nu : indices) d = std::max(d, nu.size());
  return d;
}

std::ptrdiff_t MultiIndexSet::find(const MultiIndex& nu) const {
  const MultiIndex t = trim(nu);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] == t) return static_cast<std::ptrdiff_t>(k);
  }
  return -1;
}

bool MultiIndexSet::contains(const MultiIndex& nu) const { return find(nu) >= 0; }

bool is_downward_closed(const std::vector<MultiIndex>& set) {
  std::set<MultiIndex> s;
  for (const auto& nu : set) s.insert(trim(nu));
  for (const auto& nu : s) {
    for (std::size_t k = 0; k < nu.size(); ++k) {
      if (nu[k] == 0) continue;
      MultiIndex mu = nu;
      --mu[k];
      if (!s.count(trim(mu))) return false;
    }
  }
  return true;
}

bool is_anchored(const std::vector<MultiIndex>& set) {
  if (!is_downward_closed(set)) return false;
  std::set<MultiIndex> s;
  for (const auto& nu : set) s.insert(trim(nu));
  auto unit = [](std::size_t j) {
    MultiIndex e(j + 1, 0);
    e[j] = 1;
    return e;
  };
  for (const auto& nu : s) {
    if (std::accumulate(nu.begin(), nu.end(), 0) != 1) continue;
    const std::size_t j = nu.size() - 1;  // nu = e_{j+1}
    for (std::size_t i = 0; i < j; ++i) {
      if (!s.count(unit(i))) return false;
    }
  }
  return true;
}

MultiIndexSet make_index_set(std::vector<MultiIndex> indices) {
  MultiIndexSet out;
  std::set<MultiIndex> seen;
  for (auto& nu : indices) {
    for (int v : nu) {
      if (v < 0) throw DomainError("multi-index entries must be >= 0");
    }
    nu = trim(nu);
    if (seen.insert(nu).second) out.indices.push_back(nu);
  }
  if (!is_downward_closed(out.indices)) {
    throw DomainError("index set is not downward closed");
  }
  out.downward_closed = true;
  out.anchored = is_anchored(out.indices);
  return out;
}

namespace {

void enumerate_anchored(int n, int dims, int k, long product, MultiIndex& cur,
                        std::vector<MultiIndex>& out) {
  if (k == dims) {
    out.push_back(trim(cur));
    return;
  }
  for (int v = 0;; ++v) {
    const long p = v == 0 ? product : product * (v + 1);
    if (p > n) break;
    cur[static_cast<std::size_t>(k)] = v;
    enumerate_anchored(n, dims, k + 1, p, cur, out);
  }
  cur[static_cast<std::size_t>(k)] = 0;
}

bool index_less(const MultiIndex& a, const MultiIndex& b) {
  const int sa = std::accumulate(a.begin(), a.end(), 0);
  const int sb = std::accumulate(b.begin(), b.end(), 0);
  if (sa != sb) return sa < sb;
  return a < b;
}

}  // namespace

MultiIndexSet anchored_set(int n, int s) {
  if (n < 1) throw DomainError("anchored set budget must be >= 1");
  if (s < 0) throw DomainError("dimension cap must be >= 0");
  const int dims = std::min(n, s);
  std::vector<MultiIndex> out;
  MultiIndex cur(static_cast<std::size_t>(dims), 0);
  enumerate_anchored(n, dims, 0, 1, cur, out);
  std::sort(out.begin(), out.end(), index_less);
  MultiIndexSet set;
  set.indices = std::move(out);
  set.downward_closed = is_downward_closed(set.indices);
  set.anchored = is_anchored(set.indices);
  return set;
}

MultiIndexSet total_degree_set(int degree, int s) {
  if (degree < 0 || s < 0) throw DomainError("degree and dimension must be >= 0");
  std::vector<MultiIndex> out;
  MultiIndex cur(static_cast<std::size_t>(s), 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == s) {
      out.push_back(trim(cur));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<std::size_t>(k)] = v;
      rec(k + 1, left - v);
    }
    cur[static_cast<std::size_t>(k)] = 0;
  };
  rec(0, degree);
  std::sort(out.begin(), out.end(), index_less);
  MultiIndexSet set;
  set.indices = std::move(out);
  set.downward_closed = true;
  set.anchored = is_anchored(set.indices);
  return set;
}

Eigen::MatrixXd design_matrix(const MultiIndexSet& set,
                              const std::vector<std::vector<double>>& ys,
                              Normalization q) {
  const std::size_t dim = set.dimension();
  std::vector<int> maxdeg(dim, 0);
  for (const auto& nu : set.indices) {
    for (std::size_t k = 0; k < nu.size(); ++k) maxdeg[k] = std::max(maxdeg[k], nu[k]);
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(ys.size()),
                    static_cast<Eigen::Index>(set.size()));
  for (std::size_t r = 0; r < ys.size(); ++r) {
    std::vector<std::vector<double>> tables(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const double yk = k < ys[r].size() ? ys[r][k] : 0.0;
      tables[k] = legendre_all(maxdeg[k], q, yk);
    }
    for (std::size_t c = 0; c < set.size(); ++c) {
      double v = 1;
      const auto& nu = set.indices[c];
      for (std::size_t k = 0; k < nu.size(); ++k) v *= tables[k][static_cast<std::size_t>(nu[k])];
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return A;
}

VectorXc SurrogateModel::evaluate(const std::vector<double>& y) const {
  const Eigen::MatrixXd row = design_matrix(index_set, {y}, normalization);
  return (row.cast<cplx>() * coeffs).transpose();
}

std::vector<double> SurrogateModel::l2_coefficient_norms(
    const std::vector<double>& weights) const {
  std::vector<double> out(index_set.size());
  for (std::size_t k = 0; k < index_set.size(); ++k) {
    double s = 0;
    const auto row = coeffs.row(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(c)];
      s += w * std::norm(row(c));
    }
    double scale = 1;
    if (normalization == Normalization::linf) {
      for (int v : index_set.indices[k]) scale /= std::sqrt(2.0 * v + 1);
    }
    out[k] = std::sqrt(s) * scale;
  }
  return out;
}

namespace {

struct SampleSet {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;  // empty for Monte Carlo
};

SampleSet make_samples(const MultiIndexSet& set, int s,
                       const SamplingConfig& cfg) {
  SampleSet out;
  if (cfg.mode == "mc") {
    if (cfg.oversampling < 1) throw DomainError("oversampling must be >= 1");
    const auto m = static_cast<std::size_t>(
        std::ceil(cfg.oversampling * static_cast<double>(set.size())));
    auto rng = make_stream(cfg.seed, "mc-sampler");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    out.points.resize(m, std::vector<double>(static_cast<std::size_t>(s)));
    for (auto& p : out.points) {
      for (auto& v : p) v = u(rng);
    }
  } else if (cfg.mode == "gauss") {
    int order = cfg.gauss_order;
    if (order <= 0) {
      int maxdeg = 0;
      for (const auto& nu : set.indices) {
        for (int v : nu) maxdeg = std::max(maxdeg, v);
      }
      order = maxdeg + 1;
    }
    const GaussLegendre& g = gauss_legendre(order);
    std::size_t total = 1;
    for (int k = 0; k < s; ++k) total *= static_cast<std::size_t>(order);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::vector<double> p(static_cast<std::size_t>(s));
      double w = 1;
      std::size_t rem = idx;
      for (int k = 0; k < s; ++k) {
        const std::size_t a = rem % static_cast<std::size_t>(order);
        rem /= static_cast<std::size_t>(order);
        p[static_cast<std::size_t>(k)] = g.nodes[a];
        w *= 0.5 * g.weights[a];
      }
      out.points.push_back(std::move(p));
      out.weights.push_back(w);
    }
  } else {
    throw DomainError("sampling mode must be mc|gauss");
  }
  return out;
}

}  // namespace

SurrogateModel fit_surrogate(const VectorEvaluator& f, const MultiIndexSet& set,
                             int s, const SamplingConfig& sampling,
                             Normalization q) {
  if (!is_downward_closed(set.indices)) {
    throw DomainError("surrogate index set must be downward closed");
  }
  if (set.dimension() > static_cast<std::size_t>(s)) {
    throw DomainError("index set uses more dimensions than the truncation");
  }
  const SampleSet samples = make_samples(set, s, sampling);
  if (samples.points.size() < set.size()) {
    throw DomainError("fewer samples than coefficients");
  }
  std::vector<VectorXc> values(samples.points.size());
  parallel_for(samples.points.size(),
               [&](std::size_t k) { values[k] = f(samples.points[k]); });
  const Eigen::Index m = static_cast<Eigen::Index>(samples.points.size());
  const Eigen::Index out_dim = values[0].size();
  MatrixXc F(m, out_dim);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (values[static_cast<std::size_t>(r)].size() != out_dim) {
      throw DomainError("evaluator output size changed between samples");
    }
    F.row(r) = values[static_cast<std::size_t>(r)].transpose();
  }
  Eigen::MatrixXd A = design_matrix(set, samples.points, q);
  if (!samples.weights.empty()) {
    for (Eigen::Index r = 0; r < m; ++r) {
      const double sw = std::sqrt(samples.weights[static_cast<std::size_t>(r)]);
      A.row(r) *= sw;
      F.row(r) *= sw;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  const double cond = diag.minCoeff() > 0 ? diag.maxCoeff() / diag.minCoeff()
                                          : std::numeric_limits<double>::infinity();
  if (qr.rank() < A.cols()) {
    std::ostringstream os;
    os << "least-squares design matrix is rank deficient (rank " << qr.rank()
       << " of " << A.cols() << ", condition ~" << cond << ")";
    throw SolveError(os.str(), cond);
  }
  SurrogateModel model;
  model.index_set = set;
  model.normalization = q;
  model.truncation_dim = s;
  model.n_samples = samples.points.size();
  model.coeffs.resize(A.cols(), out_dim);
  for (Eigen::Index c = 0; c < out_dim; ++c) {
    const Eigen::VectorXd re = qr.solve(Eigen::VectorXd(F.col(c).real()));
    const Eigen::VectorXd im = qr.solve(Eigen::VectorXd(F.col(c).imag()));
    model.coeffs.col(c) = re.cast<cplx>() + kI * im.cast<cplx>();
  }
  const double fn = F.norm();
  model.residual = fn > 0 ? (A.cast<cplx>() * model.coeffs - F).norm() / fn : 0.0;
  return model;
}

SurrogateModel fit_surrogate(const ScalarEvaluator& f, const MultiIndexSet& set,
                             int s, const SamplingConfig& sampling,
                             Normalization q) {
  return fit_surrogate(
      VectorEvaluator([&f](const std::vector<double>& y) {
        VectorXc v(1);
        v(0) = f(y);
        return v;
      }),
      set, s, sampling, q);
}

std::vector<std::pair<int, double>> best_n_term_curve(
    const SurrogateModel& model, const std::vector<int>& n_list,
    bool downward_closed, const std::vector<double>& weights) {
  const std::vector<double> a = model.l2_coefficient_norms(weights);
  const std::size_t L = a.size();
  // Order in which coefficients are kept.
  std::vector<std::size_t> order;
  if (!downward_closed) {
    order.resize(L);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
  } else {
    std::set<MultiIndex> kept;
    std::vector<bool> used(L, false);
    for (std::size_t step = 0; step < L; ++step) {
      std::ptrdiff_t best = -1;
      for (std::size_t k = 0; k < L; ++k) {
        if (used[k]) continue;
        const auto& nu = model.index_set.indices[k];
        bool ok = true;
        for (std::size_t d = 0; d < nu.size() && ok; ++d) {
          if (nu[d] == 0) continue;
          MultiIndex mu = nu;
          --mu[d];
          ok = kept.count(trim(mu)) > 0;
        }
        if (ok && (best < 0 || a[k] > a[static_cast<std::size_t>(best)])) {
          best = static_cast<std::ptrdiff_t>(k);
        }
      }
      if (best < 0) break;
      used[static_cast<std::size_t>(best)] = true;
      kept.insert(model.index_set.indices[static_cast<std::size_t>(best)]);
      order.push_back(static_cast<std::size_t>(best));
    }
  }
  // suffix[k] = l2 norm of coefficients not among the first k kept.
  std::vector<double> suffix(L + 1, 0.0);
  for (std::size_t k = L; k-- > 0;) {
    suffix[k] = suffix[k + 1] + a[order[k]] * a[order[k]];
  }
  std::vector<std::pair<int, double>> out;
  for (int n : n_list) {
    if (n < 0 || static_cast<std::size_t>(n) > L) {
      throw DomainError("n exceeds the number of coefficients");
    }
    out.emplace_back(n, std::sqrt(suffix[static_cast<std::size_t>(n)]));
  }
  return out;
}

std::vector<DecayRate> decay_diagnostics(const SurrogateModel& model,
                                         double floor) {
  const std::vector<double> a = model.l2_coefficient_norms();
  const double amax = *std::max_element(a.begin(), a.end());
  const double cut = std::max(floor, 10 * model.residual) * amax;
  std::vector<DecayRate> out;
  for (int j = 0; j < model.truncation_dim; ++j) {
    std::vector<double> ks, logs;
    for (int k = 1;; ++k) {
      MultiIndex nu(static_cast<std::size_t>(j + 1), 0);
      nu[static_cast<std::size_t>(j)] = k;
      const std::ptrdiff_t idx = model.index_set.find(nu);
      if (idx < 0) break;
      const double v = a[static_cast<std::size_t>(idx)];
      if (!(v > cut)) break;
      ks.push_back(k);
      logs.push_back(std::log(v));
    }
    if (ks.size() < 3) {
      std::ostringstream os;
      os << "dimension " << j + 1 << " has " << ks.size()
         << " usable chain coefficients (need 3)";
      throw DomainError(os.str());
    }
    const double n = static_cast<double>(ks.size());
    const double mk = std::accumulate(ks.begin(), ks.end(), 0.0) / n;
    const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      sxx += (ks[i] - mk) * (ks[i] - mk);
      sxy += (ks[i] - mk) * (logs[i] - ml);
      syy += (logs[i] - ml) * (logs[i] - ml);
    }
    DecayRate r;
    r.dimension = j + 1;
    r.slope = sxy / sxx;
    r.rho = std::exp(-r.slope);
    const double ss_res = syy - r.slope * sxy;
    r.r2 = syy > 0 ? 1 - std::max(0.0, ss_res) / syy : 1.0;
    r.n_points = static_cast<int>(ks.size());
    out.push_back(r);
  }
  return out;
}

double fit_loglog_slope(const std::vector<std::pair<int, double>>& curve) {
  std::vector<double> x, y;
  for (const auto& [n, e] : curve) {
    if (n > 0 && e > 0) {
      x.push_back(std::log(static_cast<double>(n)));
      y.push_back(std::log(e));
    }
  }
  if (x.size() < 2) throw DomainError("need two positive points for a slope");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

nlohmann::json surrogate_to_json(const SurrogateModel& model) {
  nlohmann::json j;
  if (model.normalization == Normalization::l2) {
    j["q"] = 2;
  } else {
    j["q"] = "inf";
  }
  j["s"] = model.truncation_dim;
  j["indices"] = model.index_set.indices;
  const bool scalar = model.coeffs.cols() == 1;
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index k = 0; k < model.coeffs.rows(); ++k) {
    if (scalar) {
      re.push_back(model.coeffs(k, 0).real());
      im.push_back(model.coeffs(k, 0).imag());
    } else {
      std::vector<double> r, i;
      for (Eigen::Index c = 0; c < model.coeffs.cols(); ++c) {
        r.push_back(model.coeffs(k, c).real());
        i.push_back(model.coeffs(k, c).imag());
      }
      re.push_back(r);
      im.push_back(i);
    }
  }
  j["coeffs_re"] = re;
  j["coeffs_im"] = im;
  return j;
}

SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  SurrogateModel m;
  const auto& q = j.at("q");
  m.normalization = q.is_string() ? normalization_from_string(q.get<std::string>())
                                  : normalization_from_string(std::to_string(q.get<int>()));
  m.truncation_dim = j.at("s").get<int>();
  m.index_set = make_index_set(j.at("indices").get<std::vector<MultiIndex>>());
  const auto& re = j.at("coeffs_re");
  const auto& im = j.at("coeffs_im");
  if (re.size() != m.index_set.size() || im.size() != re.size()) {
    throw DomainError("coefficient count does not match index set");
  }
  const bool scalar = re.empty() || re[0].is_number();
  const Eigen::Index cols = scalar ? 1 : static_cast<Eigen::Index>(re[0].size());
  m.coeffs.resize(static_cast<Eigen::Index>(re.size()), cols);
  for (std::size_t k = 0; k < re.size(); ++k) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double r = scalar ? re[k].get<double>() : re[k][static_cast<std::size_t>(c)].get<double>();
      const double i = scalar ? im[k].get<double>() : im[k][static_cast<std::size_t>(c)].get<double>();
      m.coeffs(static_cast<Eigen::Index>(k), c) = cplx(r, i);
    }
  }
  return m;
}

}  // namespace parabem
