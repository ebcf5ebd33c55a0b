#include "parabem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "parabem/error.hpp"

namespace parabem {

namespace {

constexpr int kCachedOrders = 64;

GaussLegendre compute_gauss_legendre(int n) {
  GaussLegendre g;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      // Recompute the derivative at the converged node.
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    const double w = 2 / ((1 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    g.nodes[lo] = -x;
    g.nodes[hi] = x;
    g.weights[lo] = g.weights[hi] = w;
  }
  if (n % 2 == 1) g.nodes[static_cast<std::size_t>(n / 2)] = 0;
  return g;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  static const auto table = [] {
    std::array<GaussLegendre, kCachedOrders + 1> t;
    for (int k = 1; k <= kCachedOrders; ++k) t[k] = compute_gauss_legendre(k);
    return t;
  }();
  if (n <= kCachedOrders) return table[static_cast<std::size_t>(n)];
  thread_local GaussLegendre scratch;
  scratch = compute_gauss_legendre(n);
  return scratch;
}

double PatchQuadrature::weight_sum() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

PatchQuadrature gauss_rule(const Rect& domain, int q, int patch_id) {
  if (q < 1) throw DomainError("quadrature order must be >= 1");
  const GaussLegendre& g = gauss_legendre(q);
  PatchQuadrature out;
  out.patch_id = patch_id;
  out.order = q;
  const double hu = 0.5 * domain.width(), hv = 0.5 * domain.height();
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      out.nodes.emplace_back(domain.u0 + hu * (g.nodes[a] + 1),
                             domain.v0 + hv * (g.nodes[b] + 1));
      out.weights.push_back(hu * hv * g.weights[a] * g.weights[b]);
    }
  }
  return out;
}

double cutoff(double t) {
  if (t < 0) throw DomainError("cutoff argument must be non-negative");
  if (t <= 0.5) return 0;
  if (t >= 1) return 1;
  const double s = 2 * t - 1;
  return s * s * (3 - 2 * s);
}

double cutoff_derivative(double t) {
  if (t < 0) throw DomainError("cutoff argument must be non-negative");
  if (t <= 0.5 || t >= 1) return 0;
  const double s = 2 * t - 1;
  return 12 * s * (1 - s);
}

PatchQuadrature CompositeRule::flatten(int patch_id) const {
  PatchQuadrature out;
  out.patch_id = patch_id;
  out.nodes = points;
  out.weights = weights;
  for (const auto& c : cells) {
    const PatchQuadrature g = gauss_rule(c.rect, c.order);
    out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
    out.weights.insert(out.weights.end(), g.weights.begin(), g.weights.end());
    out.order = std::max(out.order, c.order);
  }
  return out;
}

namespace {

double rect_point_distance(const Rect& r, const Vec2& p) {
  const double dx = std::max({r.u0 - p(0), 0.0, p(0) - r.u1});
  const double dy = std::max({r.v0 - p(1), 0.0, p(1) - r.v1});
  return std::hypot(dx, dy);
}

struct AmbientExtent {
  double diameter;
  double dmin;  // lower estimate of the distance to the target
  double dmax;
};

AmbientExtent ambient_extent(const std::function<Vec3(const Vec2&)>& chi,
                             const Rect& r, const Vec3& target) {
  std::array<Vec3, 9> pts;
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const Vec3 x = chi(Vec2(r.u0 + 0.5 * a * r.width(),
                              r.v0 + 0.5 * b * r.height()));
      pts[static_cast<std::size_t>(3 * a + b)] = x;
      const double d = (x - target).norm();
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  const double diam = std::max((pts[0] - pts[8]).norm(), (pts[2] - pts[6]).norm());
  return {diam, std::max(0.0, dmin - 0.25 * diam), dmax + 0.25 * diam};
}

class RuleBuilder {
 public:
  RuleBuilder(const Rect& domain, const SingularRuleOptions& opts,
              std::function<Vec3(const Vec2&)> chi)
      : domain_(domain), opts_(opts), chi_(std::move(chi)) {
    std::sort(opts_.breaks.begin(), opts_.breaks.end());
    radial_ = !opts_.breaks.empty() || std::isfinite(opts_.support);
    if (std::isfinite(opts_.support) &&
        std::find(opts_.breaks.begin(), opts_.breaks.end(), opts_.support) ==
            opts_.breaks.end()) {
      opts_.breaks.push_back(opts_.support);
      std::sort(opts_.breaks.begin(), opts_.breaks.end());
    }
  }

  CompositeRule singular(const Vec2& p) {
    if (!domain_.contains(p)) {
      throw DomainError("singular rule target outside the patch domain");
    }
    target_uv_ = p;
    has_uv_ = true;
    target_x_ = chi_ ? chi_(p) : Vec3(p(0), p(1), 0);
    const Vec2 c00(domain_.u0, domain_.v0), c10(domain_.u1, domain_.v0),
        c11(domain_.u1, domain_.v1), c01(domain_.u0, domain_.v1);
    const std::array<Vec2, 5> ring = {c00, c10, c11, c01, c00};
    for (int k = 0; k < 4; ++k) edge(ring[k], ring[k + 1], 0);
    return std::move(rule_);
  }

  CompositeRule near(const Vec3& target) {
    target_x_ = target;
    has_uv_ = false;
    quadtree(domain_, 0);
    return std::move(rule_);
  }

 private:
  double ref_dist(const Vec2& u) const {
    if (chi_) return (chi_(u) - target_x_).norm();
    return (u - target_uv_).norm();
  }

  // Reference distance along the ray p + t (q - p) crosses r at the returned t.
  double crossing(const Vec2& q, double r) const {
    double lo = 0, hi = 1;
    for (int it = 0; it < 48; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ref_dist(target_uv_ + mid * (q - target_uv_)) < r ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Fan triangle (target, a, b); the base is bisected until it is short
  // compared with its distance to the target, so the angular integrand stays
  // smooth. A target on the base line gives a zero-area triangle (dropped).
  void edge(const Vec2& a, const Vec2& b, int depth) {
    const Vec2 ab = b - a;
    const double len = ab.norm();
    const double t = std::clamp((target_uv_ - a).dot(ab) / (len * len), 0.0, 1.0);
    const double dist = (a + t * ab - target_uv_).norm();
    const Vec2 pa = a - target_uv_;
    if (std::abs(pa(0) * ab(1) - pa(1) * ab(0)) <= 1e-14 * len * len) return;
    if (len > opts_.split_ratio * dist && depth < opts_.max_depth) {
      const Vec2 mid = 0.5 * (a + b);
      edge(a, mid, depth + 1);
      edge(mid, b, depth + 1);
      return;
    }
    triangle(a, b, cell_order_for(len, dist, opts_.cell_tol, opts_.singular_order));
  }

  void triangle(const Vec2& a, const Vec2& b, int angular_order) {
    const Vec2 pa = a - target_uv_, ab = b - a;
    const double jac = std::abs(pa(0) * ab(1) - pa(1) * ab(0));
    if (jac <= 1e-300) return;
    const GaussLegendre& gs = gauss_legendre(angular_order);
    const GaussLegendre& g = gauss_legendre(opts_.singular_order);
    const int m = opts_.singular_order;
    for (int i = 0; i < angular_order; ++i) {
      const double s = 0.5 * (gs.nodes[i] + 1);
      const double ws = 0.5 * gs.weights[i];
      const Vec2 q = a + s * ab;
      std::vector<double> tb = {0.0};
      if (radial_) {
        const double dend = ref_dist(q);
        for (double r : opts_.breaks) {
          if (r < dend) tb.push_back(crossing(q, r));
        }
      }
      tb.push_back(1.0);
      for (std::size_t seg = 0; seg + 1 < tb.size(); ++seg) {
        const double t0 = tb[seg], t1 = tb[seg + 1];
        if (t1 <= t0) continue;
        if (std::isfinite(opts_.support) &&
            ref_dist(target_uv_ + 0.5 * (t0 + t1) * (q - target_uv_)) >
                opts_.support) {
          continue;
        }
        for (int k = 0; k < m; ++k) {
          const double t = t0 + 0.5 * (t1 - t0) * (g.nodes[k] + 1);
          const double wt = 0.5 * (t1 - t0) * g.weights[k];
          rule_.points.push_back(target_uv_ + t * (q - target_uv_));
          rule_.weights.push_back(ws * wt * t * jac);
        }
      }
    }
  }

  void quadtree(const Rect& cell, int depth) {
    bool split = false;
    double size_ratio_dist;
    double size = 0, dist = 0;
    if (chi_) {
      const AmbientExtent e = ambient_extent(chi_, cell, target_x_);
      if (std::isfinite(opts_.support) && e.dmin > opts_.support) return;
      if (radial_) {
        for (double r : opts_.breaks) {
          if (e.dmin < r && r < e.dmax && e.diameter > 0.1 * r) split = true;
        }
      }
      size = e.diameter;
      dist = e.dmin;
    } else {
      size = std::max(cell.width(), cell.height());
      dist = rect_point_distance(cell, target_uv_);
    }
    size_ratio_dist = size - opts_.split_ratio * dist;
    if (size_ratio_dist > 0) split = true;
    if (split && depth < opts_.max_depth) {
      const double um = 0.5 * (cell.u0 + cell.u1), vm = 0.5 * (cell.v0 + cell.v1);
      quadtree({cell.u0, um, cell.v0, vm}, depth + 1);
      quadtree({um, cell.u1, cell.v0, vm}, depth + 1);
      quadtree({cell.u0, um, vm, cell.v1}, depth + 1);
      quadtree({um, cell.u1, vm, cell.v1}, depth + 1);
      return;
    }
    int order = cell_order_for(size, dist, opts_.cell_tol, opts_.cell_order);
    if (split) order = opts_.cell_order;  // depth limit reached
    rule_.cells.push_back({cell, order});
  }

  Rect domain_;
  SingularRuleOptions opts_;
  std::function<Vec3(const Vec2&)> chi_;
  bool radial_ = false;
  bool has_uv_ = false;
  Vec2 target_uv_ = Vec2::Zero();
  Vec3 target_x_ = Vec3::Zero();
  CompositeRule rule_;
};

std::function<Vec3(const Vec2&)> point_map(const PatchChart& chart) {
  return [&chart](const Vec2& u) { return chart.point(u); };
}

}  // namespace

CompositeRule singular_rule(const Rect& domain, const Vec2& target,
                            const SingularRuleOptions& opts) {
  return RuleBuilder(domain, opts, nullptr).singular(target);
}

CompositeRule singular_rule(const PatchChart& chart, const Vec2& target,
                            const SingularRuleOptions& opts) {
  return RuleBuilder(chart.domain(), opts, point_map(chart)).singular(target);
}

PatchQuadrature duffy_selfpatch_rule(const Rect& domain, const Vec2& target,
                                     int order) {
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  SingularRuleOptions o;
  o.singular_order = order;
  o.cell_order = order;
  return singular_rule(domain, target, o).flatten();
}

PatchQuadrature duffy_selfpatch_rule(const PatchChart& chart,
                                     const Vec2& target, int order) {
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  SingularRuleOptions o;
  o.singular_order = order;
  o.cell_order = order;
  return singular_rule(chart.domain(), target, o).flatten(chart.id());
}

bool is_far_patch(const PatchChart& chart, const Vec3& target, double ratio) {
  const AmbientExtent e = ambient_extent(point_map(chart), chart.domain(), target);
  return e.diameter <= ratio * e.dmin;
}

int cell_order_for(double size, double dist, double tol, int max_order) {
  if (!(dist > 0) || !(size > 0)) return max_order;
  const double z = 2 * dist / size;
  const double rho = z + std::sqrt(z * z + 1);
  const int m = static_cast<int>(std::ceil(std::log(1 / tol) / (2 * std::log(rho))));
  return std::clamp(m, std::min(3, max_order), max_order);
}

CompositeRule near_rule(const PatchChart& chart, const Vec3& target,
                        const SingularRuleOptions& opts) {
  return RuleBuilder(chart.domain(), opts, point_map(chart)).near(target);
}

LagrangeBasis::LagrangeBasis(std::vector<double> nodes)
    : nodes_(std::move(nodes)), bary_(nodes_.size(), 1.0) {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != k) bary_[k] /= (nodes_[k] - nodes_[j]);
    }
  }
}

void LagrangeBasis::eval(double x, double* out) const {
  const std::size_t n = nodes_.size();
  double ell = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = x - nodes_[k];
    if (diff == 0) {
      std::fill(out, out + n, 0.0);
      out[k] = 1;
      return;
    }
    ell *= diff;
  }
  for (std::size_t k = 0; k < n; ++k) out[k] = ell * bary_[k] / (x - nodes_[k]);
}

}  // namespace parabem
