#include "parabem/holocheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "parabem/error.hpp"
#include "parabem/parallel.hpp"
#include "parabem/rng.hpp"

namespace parabem {

namespace {

double max_abs(const VectorXc& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

ComplexParamPoint with_coordinate(const ComplexParamPoint& z, std::size_t j,
                                  cplx value) {
  ComplexParamPoint w = z;
  w.values[j] = value;
  return w;
}

void check_disk(const ComplexParamPoint& z, std::size_t j, double radius) {
  if (j >= z.size()) throw DomainError("derivative dimension out of range");
  if (!(radius > 0)) throw DomainError("contour radius must be positive");
  const double rho = z.polyradius[j];
  if (dist_to_interval(z.values[j]) + radius > rho - 1 + 1e-12) {
    std::ostringstream os;
    os << "contour disk of radius " << radius << " around z_" << j + 1 << " = "
       << z.values[j] << " leaves O_rho with rho = " << rho;
    throw InadmissibleError(os.str());
  }
}

double factorial(int m) {
  double r = 1;
  for (int k = 2; k <= m; ++k) r *= k;
  return r;
}

}  // namespace

VectorXc cauchy_derivative(const HoloFn& f, const ComplexParamPoint& z,
                           std::size_t j, double radius, int m, int nodes) {
  if (m < 0 || nodes < 1) throw DomainError("bad derivative order or node count");
  check_disk(z, j, radius);
  VectorXc acc;
  for (int k = 0; k < nodes; ++k) {
    const double th = 2 * kPi * k / nodes;
    const cplx e = std::polar(1.0, th);
    const VectorXc v = f(with_coordinate(z, j, z.values[j] + radius * e));
    if (k == 0) acc = VectorXc::Zero(v.size());
    acc += v * std::polar(1.0, -m * th);
  }
  return acc * (factorial(m) / (nodes * std::pow(radius, m)));
}

cplx cauchy_derivative(const Holo1D& f, cplx z, double radius, int m,
                       int nodes) {
  if (m < 0 || nodes < 1) throw DomainError("bad derivative order or node count");
  if (!(radius > 0)) throw DomainError("contour radius must be positive");
  cplx acc = 0;
  for (int k = 0; k < nodes; ++k) {
    const double th = 2 * kPi * k / nodes;
    acc += f(z + radius * std::polar(1.0, th)) * std::polar(1.0, -m * th);
  }
  return acc * (factorial(m) / (nodes * std::pow(radius, m)));
}

VectorXc finite_difference(const HoloFn& f, const ComplexParamPoint& z,
                           std::size_t j, double step) {
  if (j >= z.size()) throw DomainError("derivative dimension out of range");
  const VectorXc fp = f(with_coordinate(z, j, z.values[j] + step));
  const VectorXc fm = f(with_coordinate(z, j, z.values[j] - step));
  return (fp - fm) / (2 * step);
}

cplx real_part_extension(const ScalarHoloFn& f, const ComplexParamPoint& z) {
  z.check_admissible();
  const ComplexParamPoint zc = z.conj();
  zc.check_admissible();
  return 0.5 * (f(z) + std::conj(f(zc)));
}

cplx imag_part_extension(const ScalarHoloFn& f, const ComplexParamPoint& z) {
  z.check_admissible();
  const ComplexParamPoint zc = z.conj();
  zc.check_admissible();
  return (f(z) - std::conj(f(zc))) / (2.0 * kI);
}

void HolomorphyReport::update_verdict() {
  bool ok = violations == 0 && std::isfinite(max_norm);
  for (double r : derivative_residuals) {
    if (r >= 0 && !(r <= tolerances.derivative)) ok = false;
  }
  if (n_derivative_checks > 0 && !(radius_residual <= tolerances.radius)) {
    ok = false;
  }
  verdict = ok;
}

nlohmann::json report_to_json(const HolomorphyReport& r) {
  nlohmann::json j;
  j["target_name"] = r.target_name;
  j["region"] = r.polyradius;
  j["max_norm"] = r.max_norm;
  j["n_samples"] = r.n_samples;
  j["violations"] = r.violations;
  j["failures"] = r.failures;
  j["derivative_residuals"] = r.derivative_residuals;
  j["radius_residual"] = r.radius_residual;
  j["n_derivative_checks"] = r.n_derivative_checks;
  j["tolerances"] = {{"derivative", r.tolerances.derivative},
                     {"radius", r.tolerances.radius}};
  j["verdict"] = r.verdict ? "pass" : "fail";
  return j;
}

namespace {

struct UnitSample {
  std::vector<double> t;   // radial fraction in [0,1]
  std::vector<double> th;  // angle
};

std::vector<UnitSample> unit_samples(std::size_t dims, std::size_t n,
                                     std::uint64_t seed) {
  auto rng = make_stream(seed, "holocheck-scan");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<UnitSample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool boundary = k % 2 == 0;
    out[k].t.resize(dims);
    out[k].th.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) {
      out[k].t[j] = boundary ? 1.0 : u01(rng);
      out[k].th[j] = 2 * kPi * u01(rng);
    }
  }
  return out;
}

cplx ellipse_point(double rho, double t, double th) {
  const double r = 1 + t * (rho - 1);
  const cplx w = std::polar(r, th);
  return 0.5 * (w + 1.0 / w);
}

ComplexParamPoint place(const UnitSample& s, const std::vector<double>& rho) {
  std::vector<cplx> v(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) {
    v[j] = ellipse_point(rho[j], s.t[j], s.th[j]);
  }
  return {std::move(v), rho};
}

struct ScanValue {
  double norm = 0;
  bool ok = true;
  std::string failure;
};

std::vector<ScanValue> evaluate_samples(const HoloFn& f,
                                        const std::vector<UnitSample>& samples,
                                        const std::vector<double>& rho) {
  std::vector<ScanValue> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) {
    try {
      const VectorXc v = f(place(samples[k], rho));
      out[k].norm = max_abs(v);
      if (!v.allFinite()) {
        out[k].ok = false;
        out[k].failure = "non-finite value";
      }
    } catch (const InadmissibleError& e) {
      out[k].ok = false;
      out[k].failure = e.what();
    }
  });
  return out;
}

void merge(HolomorphyReport& r, const std::vector<ScanValue>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k].ok) {
      r.max_norm = std::max(r.max_norm, values[k].norm);
    } else {
      ++r.violations;
      if (r.failures.size() < 10) {
        r.failures.push_back("sample " + std::to_string(k) + ": " +
                             values[k].failure);
      }
    }
  }
}

}  // namespace

HolomorphyReport boundedness_scan(const std::string& name, const HoloFn& f,
                                  const std::vector<double>& polyradius,
                                  std::size_t n_samples, std::uint64_t seed) {
  HolomorphyReport r;
  r.target_name = name;
  r.polyradius = polyradius;
  r.n_samples = n_samples;
  const auto samples = unit_samples(polyradius.size(), n_samples, seed);
  merge(r, evaluate_samples(f, samples, polyradius));
  r.update_verdict();
  return r;
}

std::vector<HolomorphyReport> nested_scan(
    const std::string& name, const HoloFn& f,
    const std::vector<std::vector<double>>& polyradii, std::size_t n_samples,
    std::uint64_t seed) {
  std::vector<HolomorphyReport> out;
  for (std::size_t k = 0; k < polyradii.size(); ++k) {
    if (k > 0) {
      const auto& a = polyradii[k - 1];
      const auto& b = polyradii[k];
      bool nested = a.size() == b.size();
      for (std::size_t j = 0; nested && j < a.size(); ++j) nested = a[j] <= b[j];
      if (!nested) throw DomainError("polyradii must be nested");
    }
    HolomorphyReport r =
        boundedness_scan(name, f, polyradii[k], n_samples, seed + k);
    if (k > 0) r.max_norm = std::max(r.max_norm, out.back().max_norm);
    r.update_verdict();
    out.push_back(std::move(r));
  }
  return out;
}

DerivativeCheck check_derivative(const HoloFn& f, const ComplexParamPoint& z,
                                 std::size_t j, double radius, double step) {
  DerivativeCheck c;
  c.z = z;
  c.dimension = j;
  c.radius = radius;
  const VectorXc f0 = f(z);
  const VectorXc c0 = cauchy_derivative(f, z, j, radius, 0);
  const VectorXc c1 = cauchy_derivative(f, z, j, radius, 1);
  const VectorXc h0 = cauchy_derivative(f, z, j, 0.5 * radius, 0);
  const VectorXc h1 = cauchy_derivative(f, z, j, 0.5 * radius, 1);
  const VectorXc fd = finite_difference(f, z, j, step);
  const double scale = std::max({max_abs(f0), max_abs(c1), 1e-300});
  c.fd_residual = max_abs(c1 - fd) / scale;
  c.radius_residual = std::max(max_abs(c0 - h0), max_abs(c1 - h1)) / scale;
  return c;
}

HolomorphyReport derivative_scan(const std::string& name, const HoloFn& f,
                                 const std::vector<double>& polyradius,
                                 std::size_t n_points, std::uint64_t seed,
                                 double step) {
  const std::size_t s = polyradius.size();
  if (s == 0) throw DomainError("derivative scan needs at least one dimension");
  HolomorphyReport r;
  r.target_name = name;
  r.polyradius = polyradius;
  r.derivative_residuals.assign(s, -1.0);
  auto rng = make_stream(seed, "holocheck-points");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> inner(s);
  for (std::size_t j = 0; j < s; ++j) inner[j] = 1 + 0.5 * (polyradius[j] - 1);
  for (std::size_t k = 0; k < n_points; ++k) {
    std::vector<cplx> v(s);
    for (std::size_t j = 0; j < s; ++j) {
      const double t = u01(rng);
      const double th = 2 * kPi * u01(rng);
      v[j] = ellipse_point(inner[j], t, th);
    }
    const std::size_t j = std::min<std::size_t>(
        s - 1, static_cast<std::size_t>(u01(rng) * static_cast<double>(s)));
    const ComplexParamPoint z(std::move(v), polyradius);
    const double radius = 0.25 * (polyradius[j] - 1);
    try {
      const DerivativeCheck c = check_derivative(f, z, j, radius, step);
      r.derivative_residuals[j] = std::max(r.derivative_residuals[j], c.fd_residual);
      r.radius_residual = std::max(r.radius_residual, c.radius_residual);
      ++r.n_derivative_checks;
    } catch (const InadmissibleError& e) {
      ++r.violations;
      if (r.failures.size() < 10) r.failures.push_back(e.what());
    }
  }
  r.n_samples = n_points;
  r.update_verdict();
  return r;
}

HoloFn negative_control() {
  return [](const ComplexParamPoint& z) {
    VectorXc v(1);
    v(0) = std::norm(z[0]);
    return v;
  };
}

HoloFn gramian_target(const ParametricSurface& surface, int patch,
                      const Vec2& u) {
  return [&surface, patch, u](const ComplexParamPoint& z) {
    const GramianData g = gramian(surface, z, patch, u);
    VectorXc v(4);
    v << g.matrix(0, 0), g.matrix(0, 1), g.matrix(1, 1), g.det;
    return v;
  };
}

HoloFn normal_target(const ParametricSurface& surface, int patch,
                     const Vec2& u) {
  return [&surface, patch, u](const ComplexParamPoint& z) {
    return VectorXc(normal(surface, z, patch, u));
  };
}

HoloFn operator_rows_target(const ParametricSurface& surface,
                            const WaveContext& ctx, const QuadConfig& cfg,
                            OperatorKind kernel,
                            const std::vector<std::size_t>& rows) {
  std::shared_ptr<const AssemblyPlan> plan;
  if (cfg.path == "duffy") plan = make_assembly_plan(surface, cfg);
  return [&surface, ctx, cfg, kernel, rows, plan](const ComplexParamPoint& z) {
    const DiscreteOperator op =
        assemble_rows(surface, ctx, z, cfg, kernel, rows, plan.get());
    const Eigen::Index n = op.matrix.cols();
    VectorXc v(static_cast<Eigen::Index>(rows.size()) * n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      v.segment(static_cast<Eigen::Index>(k) * n, n) =
          op.matrix.row(static_cast<Eigen::Index>(rows[k])).transpose();
    }
    return v;
  };
}

HoloFn far_field_target(const ForwardModel& model) {
  return [model](const ComplexParamPoint& z) {
    const ForwardResult r = model.evaluate(z);
    return VectorXc(Eigen::Map<const VectorXc>(
        r.far_fields.data(), static_cast<Eigen::Index>(r.far_fields.size())));
  };
}

}  // namespace parabem
