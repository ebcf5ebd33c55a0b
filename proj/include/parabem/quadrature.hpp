#pragma once

#include <limits>
#include <vector>

#include "parabem/geometry.hpp"

namespace parabem {

struct GaussLegendre {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1]. Cached for n <= 64.
const GaussLegendre& gauss_legendre(int n);

struct PatchQuadrature {
  int patch_id = -1;
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  int order = 0;

  std::size_t size() const { return nodes.size(); }
  double weight_sum() const;
};

/// Tensor Gauss-Legendre rule with q points per axis mapped to the rectangle.
PatchQuadrature gauss_rule(const Rect& domain, int q, int patch_id = -1);

/// C^1 cutoff: 0 on [0, 1/2], cubic smoothstep in s = 2t - 1 on (1/2, 1),
/// 1 on [1, inf). Throws DomainError for t < 0.
double cutoff(double t);
double cutoff_derivative(double t);

/// Tensor m x m Gauss cell of a composite rule.
struct TensorCell {
  Rect rect;
  int order = 0;
};

/// Composite rule on one patch: tensor cells plus scattered points (the
/// Duffy triangles). Cells are kept separate so tensor-structured integrands
/// can be contracted axis by axis.
struct CompositeRule {
  std::vector<TensorCell> cells;
  std::vector<Vec2> points;
  std::vector<double> weights;

  PatchQuadrature flatten(int patch_id = -1) const;
};

struct SingularRuleOptions {
  int singular_order = 12;  // Gauss points per direction on Duffy triangles
  int cell_order = 8;       // max Gauss points per axis on quadtree cells
  double split_ratio = 1.5; // split a cell while size > ratio * distance
  double cell_tol = 1e-10;  // leaf cells use the fewest points reaching this
  int max_depth = 14;
  // Radii (reference distance to the target) where the integrand has a kink;
  // rules are split there. Parts farther than `support` are dropped.
  std::vector<double> breaks;
  double support = std::numeric_limits<double>::infinity();
};

/// Rule for integrands with a 1/r singularity at `target` in the domain
/// (chart coordinates): Duffy triangles fanning out from the target to the
/// boundary, with each boundary edge bisected until its pieces are short
/// relative to their distance from the target. A target on the boundary
/// drops the zero-area triangles of its own edge; bisection towards a corner
/// target is clamped at max_depth.
CompositeRule singular_rule(const Rect& domain, const Vec2& target,
                            const SingularRuleOptions& opts = {});
/// Same, with distances measured on the chart image (needed for `breaks`).
CompositeRule singular_rule(const PatchChart& chart, const Vec2& target,
                            const SingularRuleOptions& opts = {});

PatchQuadrature duffy_selfpatch_rule(const Rect& domain, const Vec2& target,
                                     int order);
PatchQuadrature duffy_selfpatch_rule(const PatchChart& chart,
                                     const Vec2& target, int order);

/// True when a q x q Gauss rule on the whole patch resolves the kernel at
/// `target` (patch diameter <= ratio * distance).
bool is_far_patch(const PatchChart& chart, const Vec3& target, double ratio);

/// Gauss order for a cell of size `size` at distance `dist` from a 1/r
/// singularity, from the Bernstein-ellipse error estimate rho^(-2m) <= tol.
int cell_order_for(double size, double dist, double tol, int max_order);

/// Quadtree rule on a patch for a target off the patch (possibly close to it).
CompositeRule near_rule(const PatchChart& chart, const Vec3& target,
                        const SingularRuleOptions& opts = {});

/// Barycentric Lagrange interpolation on a fixed 1-D node set.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(std::vector<double> nodes);
  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  /// Values of all basis polynomials at x, written into out[0..size).
  void eval(double x, double* out) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> bary_;
};

}  // namespace parabem
