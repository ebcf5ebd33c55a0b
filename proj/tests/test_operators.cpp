#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "parabem/error.hpp"
#include "parabem/kernels.hpp"
#include "parabem/operators.hpp"

using namespace parabem;

namespace {

constexpr cplx I(0, 1);

std::shared_ptr<const ParametricSurface> sphere() {
  static auto s = std::make_shared<const ParametricSurface>(
      surface_from_json({{"reference", "sphere"}}));
  return s;
}

WaveContext laplace_like() {
  WaveContext c;
  c.kappa = 1e-7;
  return c;
}

QuadConfig quad(int order) {
  QuadConfig q;
  q.order = order;
  return q;
}

VectorXc random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  VectorXc v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

// Random cubic polynomial in the reference coordinates, sampled at the nodes.
VectorXc smooth_density(std::mt19937_64& rng, const Discretization& d) {
  std::normal_distribution<double> g;
  std::vector<cplx> c;
  for (int k = 0; k < 20; ++k) c.emplace_back(g(rng), g(rng));
  VectorXc v(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Vec3& x = d.reference[i];
    cplx s = 0;
    int k = 0;
    for (int a = 0; a <= 3; ++a) {
      for (int b = 0; a + b <= 3; ++b) {
        const int e = 3 - a - b;
        for (int cc = 0; cc <= e; ++cc) {
          if (a + b + cc > 3) continue;
          s += c[static_cast<std::size_t>(k++ % 20)] * std::pow(x(0), a) * std::pow(x(1), b) *
               std::pow(x(2), cc);
        }
      }
    }
    v(static_cast<Eigen::Index>(i)) = s;
  }
  return v;
}

double max_abs_dev(const VectorXc& v, cplx target) {
  return (v.array() - target).abs().maxCoeff();
}

}  // namespace

TEST_CASE("laplace single layer of a constant on the unit sphere") {
  const ComplexParamPoint z = ComplexParamPoint::real({});
  const DiscreteOperator v = assemble_slp(*sphere(), laplace_like(), z, quad(6));
  CHECK(v.size() == 6 * 36);
  const VectorXc one = VectorXc::Ones(static_cast<Eigen::Index>(v.size()));
  CHECK(max_abs_dev(v.matrix * one, 1.0) < 1e-4);
  for (cplx w : v.weights) {
    CHECK(w.real() > 0);
    CHECK(w.imag() == 0.0);
  }
}

TEST_CASE("single layer is symmetric in the weighted pairing") {
  WaveContext ctx;
  const DiscreteOperator v =
      assemble_slp(*sphere(), ctx, ComplexParamPoint::real({}), quad(6));
  const WeightedInnerProduct ip = v.inner_product();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const VectorXc phi = smooth_density(rng, *v.geometry);
    const VectorXc psi = smooth_density(rng, *v.geometry);
    const cplx lhs = ip(v.matrix * phi, psi);
    CHECK(std::abs(lhs - ip(phi, v.matrix * psi)) < 1e-4 * std::abs(lhs));
  }
  // Far entries divided by the source weight are exactly symmetric.
  const auto& d = *v.geometry;
  for (std::size_t i = 0; i < d.size(); i += 11) {
    for (std::size_t j = 0; j < d.size(); j += 3) {
      if (!is_far_patch(sphere()->patch(d.nodes[j].patch), d.reference[i], 1.5) ||
          !is_far_patch(sphere()->patch(d.nodes[i].patch), d.reference[j], 1.5)) {
        continue;
      }
      const cplx a = v.matrix(Eigen::Index(i), Eigen::Index(j)) / v.weights[j];
      const cplx b = v.matrix(Eigen::Index(j), Eigen::Index(i)) / v.weights[i];
      CHECK(std::abs(a - b) <= 1e-15 * std::abs(a));
    }
  }
}

TEST_CASE("far patch entries are plain kernel times weight") {
  WaveContext ctx;
  const auto s = sphere();
  const DiscreteOperator v = assemble_slp(*s, ctx, ComplexParamPoint::real({}), quad(4));
  const auto& d = *v.geometry;
  int checked = 0;
  for (std::size_t i = 0; i < d.size(); i += 7) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if ((d.points[i].x.real() - d.points[j].x.real()).norm() < 1.7) continue;
      if (is_far_patch(s->patch(d.nodes[j].patch), d.points[i].x.real(), 1.5)) {
        const cplx ref = slp_kernel(ctx, d.points[i].x - d.points[j].x) * d.weights[j];
        CHECK(std::abs(v.matrix(Eigen::Index(i), Eigen::Index(j)) - ref) < 1e-12);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("double layer identities on the unit sphere") {
  const ComplexParamPoint z = ComplexParamPoint::real({});
  const DiscreteOperator k = assemble_dlp(*sphere(), laplace_like(), z, quad(6));
  const DiscreteOperator kp = assemble_adjoint_dlp(*sphere(), laplace_like(), z, quad(6));
  const VectorXc one = VectorXc::Ones(static_cast<Eigen::Index>(k.size()));
  // Gauss identity: the double layer of a constant is -1/2 on the surface.
  CHECK(max_abs_dev(k.matrix * one, -0.5) < 1e-4);
  // On the sphere, (x - y).n_x = |x - y|^2 / 2 makes K' 1 = -1/2 as well.
  CHECK(max_abs_dev(kp.matrix * one, -0.5) < 1e-4);
  CHECK(max_abs_dev(0.5 * one - kp.matrix * one, 1.0) < 1e-4);
  CHECK(k.matrix.allFinite());
}

TEST_CASE("double layers vanish on a flat patch") {
  const ParametricSurface flat({flat_chart(0, Rect{-1, 1, -1, 1})}, AffineMap{}, {});
  WaveContext ctx;
  const ComplexParamPoint z = ComplexParamPoint::real({});
  CHECK(assemble_dlp(flat, ctx, z, quad(4)).matrix.cwiseAbs().maxCoeff() == 0.0);
  CHECK(assemble_adjoint_dlp(flat, ctx, z, quad(4)).matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("combined operators and weighted adjointness") {
  WaveContext ctx;
  ctx.eta = 1.3;
  const auto s = surface_from_json(
      {{"reference", "sphere"}, {"modes", {{"count", 2}, {"amplitude", 0.2}}}});
  const ComplexParamPoint z = ComplexParamPoint::real({0.5, -0.5});
  const QuadConfig q = quad(6);
  const DiscreteOperator v = assemble_slp(s, ctx, z, q);
  const DiscreteOperator k = assemble_dlp(s, ctx, z, q);
  const DiscreteOperator kp = assemble_adjoint_dlp(s, ctx, z, q);
  const DiscreteOperator a = assemble_combined(s, ctx, z, q, Variant::indirect);
  const DiscreteOperator ap = assemble_combined(s, ctx, z, q, Variant::direct);
  const Eigen::Index n = v.matrix.rows();
  const MatrixXc id = MatrixXc::Identity(n, n);
  CHECK((a.matrix - (0.5 * id + k.matrix - I * ctx.eta * v.matrix)).norm() < 1e-12 * a.matrix.norm());
  CHECK((ap.matrix - (0.5 * id + kp.matrix - I * ctx.eta * v.matrix)).norm() < 1e-12 * ap.matrix.norm());

  const Eigen::JacobiSVD<MatrixXc> svd(a.matrix);
  const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
  CHECK(std::isfinite(cond));
  CHECK(cond < 100);

  const WeightedInnerProduct ip = a.inner_product();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const VectorXc phi = smooth_density(rng, *a.geometry);
    const VectorXc psi = smooth_density(rng, *a.geometry);
    // Discrepancy relative to the Cauchy-Schwarz scale of the pairing.
    const cplx lhs = ip(k.matrix * phi, psi);
    const cplx rhs = ip(phi, kp.matrix * psi);
    CHECK(std::abs(lhs - rhs) / (ip.norm(k.matrix * phi) * ip.norm(psi)) < 1e-3);
    const cplx la = ip(a.matrix * phi, psi);
    const cplx ra = ip(phi, ap.matrix * psi);
    CHECK(std::abs(la - ra) / (ip.norm(a.matrix * phi) * ip.norm(psi)) < 1e-3);
  }
}

TEST_CASE("regularized single layer") {
  WaveContext ctx;
  const auto s = sphere();
  const ComplexParamPoint z = ComplexParamPoint::real({});
  const QuadConfig q = quad(4);
  const DiscreteOperator plain = assemble_slp(*s, ctx, z, q);
  const auto& d = *plain.geometry;
  const DiscreteOperator r1 = assemble_regularized(*s, ctx, z, q, 1);
  const DiscreteOperator rbig = assemble_regularized(*s, ctx, z, q, 1000);
  for (std::size_t i = 0; i < d.size(); i += 5) {
    CHECK(r1.matrix(Eigen::Index(i), Eigen::Index(i)) == cplx(0, 0));
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double dist = (d.reference[i] - d.reference[j]).norm();
      if (dist < 0.5) CHECK(r1.matrix(Eigen::Index(i), Eigen::Index(j)) == cplx(0, 0));
      if (i != j) {
        const cplx ref = slp_kernel(ctx, d.points[i].x - d.points[j].x) * d.weights[j];
        CHECK(std::abs(rbig.matrix(Eigen::Index(i), Eigen::Index(j)) - ref) < 1e-13);
      }
    }
  }
}

TEST_CASE("patch localization sums to the full operator") {
  WaveContext ctx;
  const auto s = sphere();
  const ComplexParamPoint z = ComplexParamPoint::real({});
  const QuadConfig q = quad(4);
  const DiscreteOperator full = assemble_slp(*s, ctx, z, q);
  MatrixXc sum = MatrixXc::Zero(full.matrix.rows(), full.matrix.cols());
  for (int p = 0; p < 6; ++p) {
    sum += assemble_localized(*s, ctx, z, q, OperatorKind::slp, p).matrix;
  }
  CHECK((sum - full.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("complex parameter weights") {
  const auto s = surface_from_json(
      {{"reference", "sphere"}, {"modes", {{"count", 2}, {"amplitude", 0.2}}}});
  const ComplexParamPoint z({cplx(0.3, 0.1), cplx(-0.2, -0.05)}, {1.2, 1.2});
  const DiscreteOperator v = assemble_slp(s, WaveContext{}, z, quad(4));
  bool any_complex = false;
  for (cplx w : v.weights) {
    CHECK(w.real() > 0);
    any_complex = any_complex || std::abs(w.imag()) > 1e-12;
  }
  CHECK(any_complex);
}

TEST_CASE("operator norms") {
  const OperatorNorms id = op_norms(DiscreteOperator::from_matrix(MatrixXc::Identity(5, 5)));
  CHECK(std::abs(id.l1 - 1) < 1e-15);
  CHECK(std::abs(id.linf - 1) < 1e-15);
  CHECK(std::abs(id.l2 - 1) < 1e-15);

  MatrixXc m(2, 2);
  m << 1, 1, 0, 1;
  const OperatorNorms n = op_norms(DiscreteOperator::from_matrix(m));
  CHECK(std::abs(n.l1 - 2) < 1e-15);
  CHECK(std::abs(n.linf - 2) < 1e-15);
  CHECK(std::abs(n.l2 - (1 + std::sqrt(5.0)) / 2) < 1e-14);

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(1, 12);
  for (int t = 0; t < 100; ++t) {
    const int k = size(rng);
    MatrixXc a(k, k);
    for (int c = 0; c < k; ++c) a.col(c) = random_vector(rng, k);
    const OperatorNorms r = op_norms(DiscreteOperator::from_matrix(a));
    CHECK(r.l2 <= std::sqrt(r.l1 * r.linf) + 1e-12);
  }

  const DiscreteOperator v =
      assemble_slp(*sphere(), WaveContext{}, ComplexParamPoint::real({}), quad(4));
  const OperatorNorms rv = op_norms(v);
  CHECK(rv.l2 <= std::sqrt(rv.l1 * rv.linf) + 1e-12);
}

TEST_CASE("binary operator dump round trip") {
  const DiscreteOperator v =
      assemble_slp(*sphere(), WaveContext{}, ComplexParamPoint::real({}), quad(2));
  const auto dir = std::filesystem::temp_directory_path() / "parabem_test_ops";
  std::filesystem::create_directories(dir);
  const auto path = dir / "slp.bin";
  save_operator(v, path);
  CHECK(std::filesystem::file_size(path) == 16 + v.size() * v.size() * 16);
  const LoadedOperator l = load_operator(path);
  CHECK(l.kind == OperatorKind::slp);
  CHECK_FALSE(l.complex_parameter);
  CHECK((l.matrix - v.matrix).cwiseAbs().maxCoeff() == 0.0);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "PBEM");

  const auto bad = dir / "bad.bin";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "XXXX0000000000000000";
  }
  CHECK_THROWS_AS(load_operator(bad), Error);
  {
    std::ofstream out(bad, std::ios::binary);
    out << "PBEM";
  }
  CHECK_THROWS_AS(load_operator(bad), Error);
  std::filesystem::remove_all(dir);
}
