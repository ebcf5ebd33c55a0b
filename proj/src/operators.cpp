#include "parabem/operators.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

#include "parabem/error.hpp"
#include "parabem/parallel.hpp"

namespace parabem {

const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::generic: return "generic";
    case OperatorKind::slp: return "slp";
    case OperatorKind::dlp: return "dlp";
    case OperatorKind::adjoint_dlp: return "adjoint_dlp";
    case OperatorKind::combined_direct: return "combined_direct";
    case OperatorKind::combined_indirect: return "combined_indirect";
    case OperatorKind::regularized: return "regularized";
    case OperatorKind::regularization_defect: return "regularization_defect";
  }
  return "generic";
}

Variant variant_from_string(const std::string& s) {
  if (s == "direct") return Variant::direct;
  if (s == "indirect") return Variant::indirect;
  throw DomainError("unknown variant '" + s + "' (expected direct|indirect)");
}

const char* to_string(Variant v) {
  return v == Variant::direct ? "direct" : "indirect";
}

QuadConfig quad_from_json(const nlohmann::json& j) {
  QuadConfig c;
  c.order = j.value("order", c.order);
  c.path = j.value("path", c.path);
  c.singular_order = j.value("singular_order", c.singular_order);
  c.near_order = j.value("near_order", c.near_order);
  c.far_ratio = j.value("far_ratio", c.far_ratio);
  c.cutoff_n = j.value("cutoff_n", c.cutoff_n);
  c.nu = j.value("nu", c.nu);
  if (c.order < 1) throw DomainError("quadrature order must be >= 1");
  if (c.path != "duffy" && c.path != "regularized") {
    throw DomainError("quadrature path must be duffy|regularized");
  }
  return c;
}

Discretization discretize(const ParametricSurface& surface,
                          const ComplexParamPoint& z, int order) {
  z.check_admissible();
  Discretization d;
  d.order = order;
  for (const auto& chart : surface.patches()) {
    const PatchQuadrature rule = gauss_rule(chart.domain(), order, chart.id());
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const ChartJet jet = chart.jet(rule.nodes[k]);
      const SurfacePoint p =
          surface.evaluate(chart.id(), rule.nodes[k], z.values, jet);
      d.nodes.push_back({chart.id(), rule.nodes[k]});
      d.gauss_weights.push_back(rule.weights[k]);
      d.reference.push_back(jet.x);
      d.points.push_back(p);
      d.weights.push_back(rule.weights[k] * p.sqrt_g);
    }
  }
  return d;
}

WeightedInnerProduct::WeightedInnerProduct(std::vector<cplx> weights)
    : weights_(std::move(weights)) {}

cplx WeightedInnerProduct::operator()(const VectorXc& a,
                                      const VectorXc& b) const {
  if (static_cast<std::size_t>(a.size()) != weights_.size() ||
      static_cast<std::size_t>(b.size()) != weights_.size()) {
    throw DomainError("inner product size mismatch");
  }
  cplx s = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    s += weights_[i] * a(static_cast<Eigen::Index>(i)) *
         b(static_cast<Eigen::Index>(i));
  }
  return s;
}

double WeightedInnerProduct::norm(const VectorXc& a) const {
  double s = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    s += std::abs(weights_[i]) * std::norm(a(static_cast<Eigen::Index>(i)));
  }
  return std::sqrt(s);
}

DiscreteOperator DiscreteOperator::from_matrix(MatrixXc m) {
  DiscreteOperator op;
  op.weights.assign(static_cast<std::size_t>(m.rows()), cplx(1.0));
  op.matrix = std::move(m);
  return op;
}

class AssemblyPlan {
 public:
  struct Point {
    PreparedPoint geo;
    double w;
  };
  struct Block {
    bool far = true;
    std::size_t begin = 0, end = 0;
  };

  const ParametricSurface* surface = nullptr;
  QuadConfig cfg;
  std::size_t n_patches = 0;
  std::vector<Block> blocks;  // (target, patch), row major
  std::vector<Point> points;
  std::vector<double> lagrange;  // 2 * order values per point: L_u then L_v

  bool matches(const ParametricSurface& s, const QuadConfig& c) const {
    return surface == &s && cfg.order == c.order &&
           cfg.singular_order == c.singular_order &&
           cfg.near_order == c.near_order && cfg.far_ratio == c.far_ratio;
  }
};

namespace {

struct KernelSelection {
  bool slp = false;
  bool dlp = false;
  bool adj = false;
};

struct RowBuffers {
  cplx* slp = nullptr;
  cplx* dlp = nullptr;
  cplx* adj = nullptr;
};

struct DefectSpec {
  int n = 0;
  double nu = 1;
};

class Assembler {
 public:
  Assembler(const ParametricSurface& surface, const WaveContext& ctx,
            const ComplexParamPoint& z, const QuadConfig& cfg,
            const AssemblyPlan* plan = nullptr)
      : surface_(surface),
        ctx_(ctx),
        z_(z),
        cfg_(cfg),
        disc_(std::make_shared<const Discretization>(
            discretize(surface, z, cfg.order))),
        plan_(plan) {
    ctx_.validate();
    if (plan_ && !plan_->matches(surface, cfg)) {
      throw DomainError("assembly plan was built for another surface or rule");
    }
    const int q = cfg.order;
    const GaussLegendre& g = gauss_legendre(q);
    for (const auto& chart : surface.patches()) {
      const Rect& r = chart.domain();
      std::vector<double> un, vn;
      for (int a = 0; a < q; ++a) {
        un.push_back(r.u0 + 0.5 * r.width() * (g.nodes[a] + 1));
        vn.push_back(r.v0 + 0.5 * r.height() * (g.nodes[a] + 1));
      }
      basis_u_.emplace_back(un);
      basis_v_.emplace_back(vn);
    }
  }

  const Discretization& disc() const { return *disc_; }
  std::shared_ptr<const Discretization> disc_ptr() const { return disc_; }
  std::size_t size() const { return disc_->size(); }
  std::size_t patch_offset(int p) const {
    return static_cast<std::size_t>(p) * static_cast<std::size_t>(cfg_.order) *
           static_cast<std::size_t>(cfg_.order);
  }

  void row(std::size_t i, KernelSelection sel, RowBuffers out, int only_patch,
           const DefectSpec* defect) const {
    const int npatch = static_cast<int>(surface_.num_patches());
    for (int p = 0; p < npatch; ++p) {
      if (only_patch >= 0 && p != only_patch) continue;
      try {
        patch_block(i, p, sel, out, defect);
      } catch (const InadmissibleError& e) {
        std::ostringstream os;
        os << e.what() << " (target node " << i << ", source patch " << p
           << ")";
        throw InadmissibleError(os.str());
      }
    }
  }

  // Plain node-to-node kernel values times weight and cutoff factor.
  void nodal_row(std::size_t i, KernelSelection sel, RowBuffers out, int n,
                 double nu) const {
    const SurfacePoint& x = disc_->points[i];
    for (std::size_t j = 0; j < size(); ++j) {
      if (j == i) continue;
      const double rr = (disc_->reference[i] - disc_->reference[j]).norm();
      const double phi = cutoff(n * std::pow(rr, nu));
      if (phi == 0) continue;
      const auto k = kernels(x, disc_->points[j], sel);
      const cplx w = disc_->weights[j] * phi;
      if (sel.slp) out.slp[j] += k[0] * w;
      if (sel.dlp) out.dlp[j] += k[1] * w;
      if (sel.adj) out.adj[j] += k[2] * w;
    }
  }

 private:
  std::array<cplx, 3> kernels(const SurfacePoint& x, const SurfacePoint& y,
                              KernelSelection sel) const {
    const CVec3 v = x.x - y.x;  // target - source
    const cplx r = complex_norm(v);
    const cplx ikr = kI * ctx_.kappa * r;
    const cplx e = std::exp(ikr) / (4 * kPi * r);
    std::array<cplx, 3> k{};
    k[0] = e;
    if (sel.dlp || sel.adj) {
      const cplx c = e * (ikr - 1.0) / (r * r);
      if (sel.dlp) k[1] = -bdot(y.normal, v) * c;
      if (sel.adj) k[2] = bdot(x.normal, v) * c;
    }
    return k;
  }

  void patch_block(std::size_t i, int p, KernelSelection sel, RowBuffers out,
                   const DefectSpec* defect) const {
    if (plan_ && !defect) {
      planned_block(i, p, sel, out);
      return;
    }
    const Node& tn = disc_->nodes[i];
    const PatchChart& chart = surface_.patch(p);
    const Vec3& xref = disc_->reference[i];
    const std::size_t off = patch_offset(p);
    const int q = cfg_.order;

    SingularRuleOptions opts;
    opts.singular_order = cfg_.singular_order;
    opts.cell_order = cfg_.near_order;
    if (defect) {
      const double support = std::pow(1.0 / defect->n, 1.0 / defect->nu);
      opts.breaks = {std::pow(0.5 / defect->n, 1.0 / defect->nu), support};
      opts.support = support;
    }

    if (!defect && tn.patch != p &&
        is_far_patch(chart, xref, cfg_.far_ratio)) {
      far_block(i, off, sel, out);
      return;
    }

    CompositeRule rule;
    if (tn.patch == p) {
      rule = defect ? singular_rule(chart, tn.u, opts)
                    : singular_rule(chart.domain(), tn.u, opts);
    } else {
      rule = near_rule(chart, xref, opts);
    }
    if (rule.cells.empty() && rule.points.empty()) return;

    const SurfacePoint& x = disc_->points[i];
    const LagrangeBasis& bu = basis_u_[static_cast<std::size_t>(p)];
    const LagrangeBasis& bv = basis_v_[static_cast<std::size_t>(p)];

    // Source values times weight for one quadrature point.
    auto source = [&](const Vec2& u, double w) {
      const ChartJet jet = chart.jet_unchecked(u);
      const SurfacePoint y = surface_.evaluate(p, u, z_.values, jet);
      double factor = w;
      if (defect) {
        const double rr = (jet.x - xref).norm();
        factor *= 1 - cutoff(defect->n * std::pow(rr, defect->nu));
      }
      auto kv = kernels(x, y, sel);
      const cplx wf = y.sqrt_g * factor;
      for (auto& v : kv) v *= wf;
      return kv;
    };

    std::array<Eigen::MatrixXcd, 3> acc;
    for (auto& a : acc) a = Eigen::MatrixXcd::Zero(q, q);
    const std::array<bool, 3> on = {sel.slp, sel.dlp, sel.adj};

    std::vector<double> lu(static_cast<std::size_t>(q)),
        lv(static_cast<std::size_t>(q));
    for (std::size_t k = 0; k < rule.points.size(); ++k) {
      const auto kv = source(rule.points[k], rule.weights[k]);
      bu.eval(rule.points[k](0), lu.data());
      bv.eval(rule.points[k](1), lv.data());
      for (int c = 0; c < 3; ++c) {
        if (!on[c]) continue;
        for (int a = 0; a < q; ++a) {
          const cplx ka = kv[c] * lu[a];
          for (int b = 0; b < q; ++b) acc[c](a, b) += ka * lv[b];
        }
      }
    }

    for (const TensorCell& cell : rule.cells) {
      const int m = cell.order;
      const GaussLegendre& g = gauss_legendre(m);
      const double hu = 0.5 * cell.rect.width(), hv = 0.5 * cell.rect.height();
      Eigen::MatrixXd Lu(q, m), Lv(q, m);
      std::vector<double> us(m), vs(m);
      for (int a = 0; a < m; ++a) {
        us[a] = cell.rect.u0 + hu * (g.nodes[a] + 1);
        vs[a] = cell.rect.v0 + hv * (g.nodes[a] + 1);
        bu.eval(us[a], lu.data());
        bv.eval(vs[a], lv.data());
        for (int b = 0; b < q; ++b) {
          Lu(b, a) = lu[b];
          Lv(b, a) = lv[b];
        }
      }
      std::array<Eigen::MatrixXcd, 3> F;
      for (int c = 0; c < 3; ++c) {
        if (on[c]) F[c] = Eigen::MatrixXcd::Zero(m, m);
      }
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          const auto kv = source(Vec2(us[a], vs[b]),
                                 hu * hv * g.weights[a] * g.weights[b]);
          for (int c = 0; c < 3; ++c) {
            if (on[c]) F[c](a, b) = kv[c];
          }
        }
      }
      for (int c = 0; c < 3; ++c) {
        if (!on[c]) continue;
        const Eigen::MatrixXcd t = Lu.cast<cplx>() * F[c];
        acc[c].noalias() += t * Lv.transpose().cast<cplx>();
      }
    }

    std::array<cplx*, 3> dst = {out.slp, out.dlp, out.adj};
    for (int c = 0; c < 3; ++c) {
      if (!on[c]) continue;
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
          dst[c][off + static_cast<std::size_t>(a * q + b)] += acc[c](a, b);
        }
      }
    }
  }

  void far_block(std::size_t i, std::size_t off, KernelSelection sel,
                 RowBuffers out) const {
    const SurfacePoint& x = disc_->points[i];
    const auto qq = static_cast<std::size_t>(cfg_.order * cfg_.order);
    for (std::size_t k = 0; k < qq; ++k) {
      const std::size_t j = off + k;
      const auto kv = kernels(x, disc_->points[j], sel);
      const cplx w = disc_->weights[j];
      if (sel.slp) out.slp[j] += kv[0] * w;
      if (sel.dlp) out.dlp[j] += kv[1] * w;
      if (sel.adj) out.adj[j] += kv[2] * w;
    }
  }

  void planned_block(std::size_t i, int p, KernelSelection sel,
                     RowBuffers out) const {
    const auto& blk =
        plan_->blocks[i * plan_->n_patches + static_cast<std::size_t>(p)];
    const std::size_t off = patch_offset(p);
    if (blk.far) {
      far_block(i, off, sel, out);
      return;
    }
    const int q = cfg_.order;
    const SurfacePoint& x = disc_->points[i];
    const std::array<bool, 3> on = {sel.slp, sel.dlp, sel.adj};
    std::array<Eigen::MatrixXcd, 3> acc;
    for (int c = 0; c < 3; ++c) {
      if (on[c]) acc[c] = Eigen::MatrixXcd::Zero(q, q);
    }
    for (std::size_t k = blk.begin; k < blk.end; ++k) {
      const auto& pt = plan_->points[k];
      const SurfacePoint y = surface_.evaluate(pt.geo, z_.values);
      auto kv = kernels(x, y, sel);
      const cplx wf = y.sqrt_g * pt.w;
      const double* lu = &plan_->lagrange[2 * static_cast<std::size_t>(q) * k];
      const double* lv = lu + q;
      for (int c = 0; c < 3; ++c) {
        if (!on[c]) continue;
        const cplx kw = kv[c] * wf;
        for (int a = 0; a < q; ++a) {
          const cplx ka = kw * lu[a];
          for (int b = 0; b < q; ++b) acc[c](a, b) += ka * lv[b];
        }
      }
    }
    std::array<cplx*, 3> dst = {out.slp, out.dlp, out.adj};
    for (int c = 0; c < 3; ++c) {
      if (!on[c]) continue;
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
          dst[c][off + static_cast<std::size_t>(a * q + b)] += acc[c](a, b);
        }
      }
    }
  }

  const ParametricSurface& surface_;
  WaveContext ctx_;
  ComplexParamPoint z_;
  QuadConfig cfg_;
  std::shared_ptr<const Discretization> disc_;
  const AssemblyPlan* plan_ = nullptr;
  std::vector<LagrangeBasis> basis_u_, basis_v_;
};

DiscreteOperator make_op(OperatorKind kind, const Assembler& as,
                         const WaveContext& ctx, const ComplexParamPoint& z) {
  DiscreteOperator op;
  op.kind = kind;
  const auto n = static_cast<Eigen::Index>(as.size());
  op.matrix = MatrixXc::Zero(n, n);
  op.nodes = as.disc().nodes;
  op.weights = as.disc().weights;
  op.ctx = ctx;
  op.z = z;
  op.geometry = as.disc_ptr();
  return op;
}

// Assembles the selected kernels row by row into up to three operators.
// Rows are independent; each is written by exactly one task.
void fill_rows(const Assembler& as, KernelSelection sel,
               std::array<DiscreteOperator*, 3> ops,
               const std::vector<std::size_t>& rows, int only_patch,
               const DefectSpec* defect, bool nodal, int n_cut, double nu) {
  const std::size_t N = as.size();
  parallel_for(rows.size(), [&](std::size_t r) {
    const std::size_t i = rows[r];
    std::array<std::vector<cplx>, 3> buf;
    RowBuffers out;
    std::array<cplx**, 3> slots = {&out.slp, &out.dlp, &out.adj};
    for (int c = 0; c < 3; ++c) {
      if (ops[c]) {
        buf[c].assign(N, cplx{});
        *slots[c] = buf[c].data();
      }
    }
    if (nodal) {
      as.nodal_row(i, sel, out, n_cut, nu);
    } else {
      as.row(i, sel, out, only_patch, defect);
    }
    for (int c = 0; c < 3; ++c) {
      if (!ops[c]) continue;
      for (std::size_t j = 0; j < N; ++j) {
        ops[c]->matrix(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(j)) = buf[c][j];
      }
    }
  });
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

KernelSelection select(OperatorKind k) {
  KernelSelection s;
  switch (k) {
    case OperatorKind::slp: s.slp = true; break;
    case OperatorKind::dlp: s.dlp = true; break;
    case OperatorKind::adjoint_dlp: s.adj = true; break;
    default: throw DomainError("kernel must be slp, dlp or adjoint_dlp");
  }
  return s;
}

std::array<DiscreteOperator*, 3> slot_for(OperatorKind k, DiscreteOperator* op) {
  std::array<DiscreteOperator*, 3> s{};
  s[k == OperatorKind::slp ? 0 : (k == OperatorKind::dlp ? 1 : 2)] = op;
  return s;
}

DiscreteOperator assemble_single(const ParametricSurface& surface,
                                 const WaveContext& ctx,
                                 const ComplexParamPoint& z,
                                 const QuadConfig& cfg, OperatorKind kind) {
  const Assembler as(surface, ctx, z, cfg);
  DiscreteOperator op = make_op(kind, as, ctx, z);
  const bool nodal = cfg.path == "regularized";
  fill_rows(as, select(kind), slot_for(kind, &op), all_rows(as.size()), -1,
            nullptr, nodal, cfg.cutoff_n, cfg.nu);
  return op;
}

}  // namespace

std::shared_ptr<const AssemblyPlan> make_assembly_plan(
    const ParametricSurface& surface, const QuadConfig& cfg) {
  auto plan = std::make_shared<AssemblyPlan>();
  plan->surface = &surface;
  plan->cfg = cfg;
  plan->n_patches = surface.num_patches();
  const int q = cfg.order;
  const auto uq = static_cast<std::size_t>(q);
  const Discretization ref = discretize(
      surface, ComplexParamPoint::real(std::vector<double>(surface.truncation(), 0.0)),
      q);
  const GaussLegendre& g = gauss_legendre(q);
  std::vector<LagrangeBasis> bu, bv;
  for (const auto& chart : surface.patches()) {
    const Rect& r = chart.domain();
    std::vector<double> un, vn;
    for (int a = 0; a < q; ++a) {
      un.push_back(r.u0 + 0.5 * r.width() * (g.nodes[a] + 1));
      vn.push_back(r.v0 + 0.5 * r.height() * (g.nodes[a] + 1));
    }
    bu.emplace_back(un);
    bv.emplace_back(vn);
  }
  SingularRuleOptions opts;
  opts.singular_order = cfg.singular_order;
  opts.cell_order = cfg.near_order;

  struct RowPlan {
    std::vector<AssemblyPlan::Block> blocks;
    std::vector<AssemblyPlan::Point> points;
    std::vector<double> lagrange;
  };
  std::vector<RowPlan> rows(ref.size());
  parallel_for(ref.size(), [&](std::size_t i) {
    RowPlan& rp = rows[i];
    const Node& tn = ref.nodes[i];
    for (std::size_t p = 0; p < plan->n_patches; ++p) {
      const PatchChart& chart = surface.patch(static_cast<int>(p));
      AssemblyPlan::Block blk;
      if (tn.patch != static_cast<int>(p) &&
          is_far_patch(chart, ref.reference[i], cfg.far_ratio)) {
        rp.blocks.push_back(blk);
        continue;
      }
      blk.far = false;
      blk.begin = rp.points.size();
      const CompositeRule rule =
          tn.patch == static_cast<int>(p)
              ? singular_rule(chart.domain(), tn.u, opts)
              : near_rule(chart, ref.reference[i], opts);
      std::vector<double> lu(uq), lv(uq);
      auto add = [&](const Vec2& u, double w) {
        rp.points.push_back({surface.prepare(chart.jet_unchecked(u)), w});
        bu[p].eval(u(0), lu.data());
        bv[p].eval(u(1), lv.data());
        rp.lagrange.insert(rp.lagrange.end(), lu.begin(), lu.end());
        rp.lagrange.insert(rp.lagrange.end(), lv.begin(), lv.end());
      };
      for (std::size_t k = 0; k < rule.points.size(); ++k) {
        add(rule.points[k], rule.weights[k]);
      }
      for (const TensorCell& cell : rule.cells) {
        const GaussLegendre& gc = gauss_legendre(cell.order);
        const double hu = 0.5 * cell.rect.width(), hv = 0.5 * cell.rect.height();
        for (int a = 0; a < cell.order; ++a) {
          for (int b = 0; b < cell.order; ++b) {
            add(Vec2(cell.rect.u0 + hu * (gc.nodes[a] + 1),
                     cell.rect.v0 + hv * (gc.nodes[b] + 1)),
                hu * hv * gc.weights[a] * gc.weights[b]);
          }
        }
      }
      blk.end = rp.points.size();
      rp.blocks.push_back(blk);
    }
  });
  for (auto& rp : rows) {
    const std::size_t base = plan->points.size();
    for (auto blk : rp.blocks) {
      blk.begin += base;
      blk.end += base;
      plan->blocks.push_back(blk);
    }
    plan->points.insert(plan->points.end(),
                        std::make_move_iterator(rp.points.begin()),
                        std::make_move_iterator(rp.points.end()));
    plan->lagrange.insert(plan->lagrange.end(), rp.lagrange.begin(),
                          rp.lagrange.end());
  }
  return plan;
}

DiscreteOperator assemble_slp(const ParametricSurface& surface,
                              const WaveContext& ctx,
                              const ComplexParamPoint& z,
                              const QuadConfig& cfg) {
  return assemble_single(surface, ctx, z, cfg, OperatorKind::slp);
}

DiscreteOperator assemble_dlp(const ParametricSurface& surface,
                              const WaveContext& ctx,
                              const ComplexParamPoint& z,
                              const QuadConfig& cfg) {
  return assemble_single(surface, ctx, z, cfg, OperatorKind::dlp);
}

DiscreteOperator assemble_adjoint_dlp(const ParametricSurface& surface,
                                      const WaveContext& ctx,
                                      const ComplexParamPoint& z,
                                      const QuadConfig& cfg) {
  return assemble_single(surface, ctx, z, cfg, OperatorKind::adjoint_dlp);
}

DiscreteOperator assemble_combined(const ParametricSurface& surface,
                                   const WaveContext& ctx,
                                   const ComplexParamPoint& z,
                                   const QuadConfig& cfg, Variant variant,
                                   const AssemblyPlan* plan) {
  if (ctx.eta == 0) throw DomainError("eta must be nonzero");
  const Assembler as(surface, ctx, z, cfg, plan);
  const OperatorKind dkind = variant == Variant::direct
                                 ? OperatorKind::adjoint_dlp
                                 : OperatorKind::dlp;
  DiscreteOperator v = make_op(OperatorKind::slp, as, ctx, z);
  DiscreteOperator k = make_op(dkind, as, ctx, z);
  KernelSelection sel;
  sel.slp = true;
  std::array<DiscreteOperator*, 3> ops{&v, nullptr, nullptr};
  if (variant == Variant::direct) {
    sel.adj = true;
    ops[2] = &k;
  } else {
    sel.dlp = true;
    ops[1] = &k;
  }
  fill_rows(as, sel, ops, all_rows(as.size()), -1, nullptr,
            cfg.path == "regularized", cfg.cutoff_n, cfg.nu);
  DiscreteOperator op = make_op(variant == Variant::direct
                                    ? OperatorKind::combined_direct
                                    : OperatorKind::combined_indirect,
                                as, ctx, z);
  op.matrix = k.matrix - kI * ctx.eta * v.matrix;
  op.matrix.diagonal().array() += 0.5;
  return op;
}

DiscreteOperator assemble_regularized(const ParametricSurface& surface,
                                      const WaveContext& ctx,
                                      const ComplexParamPoint& z,
                                      const QuadConfig& cfg, int n,
                                      OperatorKind kernel) {
  if (n < 1) throw DomainError("cutoff index n must be >= 1");
  const Assembler as(surface, ctx, z, cfg);
  DiscreteOperator op = make_op(OperatorKind::regularized, as, ctx, z);
  fill_rows(as, select(kernel), slot_for(kernel, &op), all_rows(as.size()), -1,
            nullptr, true, n, cfg.nu);
  return op;
}

DiscreteOperator assemble_regularization_defect(
    const ParametricSurface& surface, const WaveContext& ctx,
    const ComplexParamPoint& z, const QuadConfig& cfg, int n,
    OperatorKind kernel) {
  if (n < 1) throw DomainError("cutoff index n must be >= 1");
  const Assembler as(surface, ctx, z, cfg);
  DiscreteOperator op =
      make_op(OperatorKind::regularization_defect, as, ctx, z);
  const DefectSpec spec{n, cfg.nu};
  fill_rows(as, select(kernel), slot_for(kernel, &op), all_rows(as.size()), -1,
            &spec, false, n, cfg.nu);
  return op;
}

DiscreteOperator assemble_rows(const ParametricSurface& surface,
                               const WaveContext& ctx,
                               const ComplexParamPoint& z,
                               const QuadConfig& cfg, OperatorKind kernel,
                               const std::vector<std::size_t>& rows,
                               const AssemblyPlan* plan) {
  const Assembler as(surface, ctx, z, cfg, plan);
  for (std::size_t r : rows) {
    if (r >= as.size()) throw DomainError("row index out of range");
  }
  DiscreteOperator op = make_op(kernel, as, ctx, z);
  fill_rows(as, select(kernel), slot_for(kernel, &op), rows, -1, nullptr,
            cfg.path == "regularized", cfg.cutoff_n, cfg.nu);
  return op;
}

DiscreteOperator assemble_localized(const ParametricSurface& surface,
                                    const WaveContext& ctx,
                                    const ComplexParamPoint& z,
                                    const QuadConfig& cfg, OperatorKind kernel,
                                    int patch) {
  surface.patch(patch);
  const Assembler as(surface, ctx, z, cfg);
  DiscreteOperator op = make_op(kernel, as, ctx, z);
  fill_rows(as, select(kernel), slot_for(kernel, &op), all_rows(as.size()),
            patch, nullptr, false, 0, cfg.nu);
  return op;
}

OperatorNorms op_norms(const DiscreteOperator& op) {
  const MatrixXc& M = op.matrix;
  const Eigen::Index n = M.rows();
  if (static_cast<std::size_t>(n) != op.weights.size() || M.cols() != n) {
    throw DomainError("operator weights do not match matrix size");
  }
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = std::abs(op.weights[static_cast<std::size_t>(i)]);
    if (!(w(i) > 0)) throw DomainError("operator norms need nonzero weights");
  }
  const Eigen::MatrixXd A = M.cwiseAbs();
  OperatorNorms out;
  for (Eigen::Index j = 0; j < n; ++j) {
    out.l1 = std::max(out.l1, A.col(j).dot(w) / w(j));
  }
  out.linf = A.rowwise().sum().maxCoeff();
  const Eigen::VectorXd s = w.cwiseSqrt();
  const MatrixXc B = s.cast<cplx>().asDiagonal() * M *
                     s.cwiseInverse().cast<cplx>().asDiagonal();
  Eigen::BDCSVD<MatrixXc> svd(B);
  out.l2 = svd.singularValues()(0);
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff),
                                 static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  std::array<char, 8> b;
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  os.write(b.data(), 8);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_operator(const DiscreteOperator& op,
                   const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const auto n = static_cast<std::uint32_t>(op.matrix.rows());
  os.write("PBEM", 4);
  put_u32(os, n);
  std::uint32_t flags = static_cast<std::uint32_t>(op.kind);
  if (!op.z.is_real()) flags |= 1u << 8;
  put_u32(os, flags);
  put_u32(os, 0);
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      put_f64(os, op.matrix(i, j).real());
      put_f64(os, op.matrix(i, j).imag());
    }
  }
  if (!os) throw Error("write failed for " + path.string());
}

LoadedOperator load_operator(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 16) throw Error("operator file too short for header");
  if (std::memcmp(data.data(), "PBEM", 4) != 0) {
    throw Error("bad operator file magic");
  }
  const std::uint32_t n = get_u32(data.data() + 4);
  const std::uint32_t flags = get_u32(data.data() + 8);
  if (get_u32(data.data() + 12) != 0) throw Error("reserved header bytes not zero");
  if ((flags & ~0x1ffu) != 0) throw Error("unknown operator flags");
  const std::uint64_t expect = 16 + 16ull * n * n;
  if (data.size() != expect) {
    throw Error("operator file size does not match N in header");
  }
  const std::uint32_t kind = flags & 0xffu;
  if (kind > static_cast<std::uint32_t>(OperatorKind::regularization_defect)) {
    throw Error("unknown operator kind in header");
  }
  LoadedOperator out;
  out.kind = static_cast<OperatorKind>(kind);
  out.complex_parameter = (flags >> 8) & 1u;
  out.matrix.resize(n, n);
  const unsigned char* p = data.data() + 16;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j, p += 16) {
      out.matrix(i, j) = cplx(get_f64(p), get_f64(p + 8));
    }
  }
  return out;
}

}  // namespace parabem
