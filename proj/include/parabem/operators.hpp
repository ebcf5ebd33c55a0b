#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parabem/geometry.hpp"
#include "parabem/kernels.hpp"
#include "parabem/quadrature.hpp"

namespace parabem {

enum class OperatorKind : std::uint8_t {
  generic = 0,
  slp = 1,
  dlp = 2,
  adjoint_dlp = 3,
  combined_direct = 4,    // 1/2 I + K' - i eta V
  combined_indirect = 5,  // 1/2 I + K - i eta V
  regularized = 6,
  regularization_defect = 7,
};

const char* to_string(OperatorKind k);

enum class Variant { direct, indirect };
Variant variant_from_string(const std::string& s);
const char* to_string(Variant v);

struct QuadConfig {
  int order = 8;              // Gauss points per axis and patch
  std::string path = "duffy"; // "duffy" | "regularized"
  int singular_order = 12;    // Duffy triangle order
  int near_order = 8;         // quadtree cell order
  double far_ratio = 1.5;     // patch diameter / distance for plain Gauss
  int cutoff_n = 8;           // regularization index for path "regularized"
  double nu = 1.0;            // singularity order in the cutoff argument
};

QuadConfig quad_from_json(const nlohmann::json& j);

struct Node {
  int patch;
  Vec2 u;
};

/// Quadrature nodes of a surface at a parameter point with the deformed
/// geometry and the surface weights gauss_weight * sqrt(g).
struct Discretization {
  std::vector<Node> nodes;
  std::vector<double> gauss_weights;
  std::vector<Vec3> reference;  // chi(u)
  std::vector<SurfacePoint> points;
  std::vector<cplx> weights;
  int order = 0;

  std::size_t size() const { return nodes.size(); }
};

Discretization discretize(const ParametricSurface& surface,
                          const ComplexParamPoint& z, int order);

/// Bilinear pairing <a, b> = sum_i w_i a_i b_i.
class WeightedInnerProduct {
 public:
  WeightedInnerProduct() = default;
  explicit WeightedInnerProduct(std::vector<cplx> weights);
  const std::vector<cplx>& weights() const { return weights_; }
  cplx operator()(const VectorXc& a, const VectorXc& b) const;
  /// sqrt(sum |w_i| |a_i|^2).
  double norm(const VectorXc& a) const;

 private:
  std::vector<cplx> weights_;
};

struct DiscreteOperator {
  OperatorKind kind = OperatorKind::generic;
  MatrixXc matrix;
  std::vector<Node> nodes;
  std::vector<cplx> weights;
  WaveContext ctx;
  ComplexParamPoint z;
  std::shared_ptr<const Discretization> geometry;  // null for from_matrix

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  WeightedInnerProduct inner_product() const {
    return WeightedInnerProduct(weights);
  }
  /// Operator with the given matrix and unit weights (norm studies).
  static DiscreteOperator from_matrix(MatrixXc m);
};

/// Parameter-independent quadrature data (rules, chart and mode jets,
/// interpolation weights) for every target node and source patch. Reusing a
/// plan across parameter points skips rule construction and chart
/// evaluation.
class AssemblyPlan;
std::shared_ptr<const AssemblyPlan> make_assembly_plan(
    const ParametricSurface& surface, const QuadConfig& cfg);

DiscreteOperator assemble_slp(const ParametricSurface& surface,
                              const WaveContext& ctx,
                              const ComplexParamPoint& z,
                              const QuadConfig& cfg);
DiscreteOperator assemble_dlp(const ParametricSurface& surface,
                              const WaveContext& ctx,
                              const ComplexParamPoint& z,
                              const QuadConfig& cfg);
DiscreteOperator assemble_adjoint_dlp(const ParametricSurface& surface,
                                      const WaveContext& ctx,
                                      const ComplexParamPoint& z,
                                      const QuadConfig& cfg);
DiscreteOperator assemble_combined(const ParametricSurface& surface,
                                   const WaveContext& ctx,
                                   const ComplexParamPoint& z,
                                   const QuadConfig& cfg, Variant variant,
                                   const AssemblyPlan* plan = nullptr);

/// Kernel times cutoff(n |x^ - y^|^nu) on the plain Gauss nodes (reference
/// distances); entries with vanishing cutoff, including the diagonal, are 0.
DiscreteOperator assemble_regularized(const ParametricSurface& surface,
                                      const WaveContext& ctx,
                                      const ComplexParamPoint& z,
                                      const QuadConfig& cfg, int n,
                                      OperatorKind kernel = OperatorKind::slp);

/// The part removed by the cutoff, integrated accurately:
/// entries of int K(x_i, y) (1 - cutoff(n |x^ - y^|^nu)) L_j(y) ds(y).
/// assemble_slp minus this matrix is the regularized operator.
DiscreteOperator assemble_regularization_defect(
    const ParametricSurface& surface, const WaveContext& ctx,
    const ComplexParamPoint& z, const QuadConfig& cfg, int n,
    OperatorKind kernel = OperatorKind::slp);

/// Rows `rows` of the slp/dlp/adjoint_dlp operator (other rows zero).
DiscreteOperator assemble_rows(const ParametricSurface& surface,
                               const WaveContext& ctx,
                               const ComplexParamPoint& z,
                               const QuadConfig& cfg, OperatorKind kernel,
                               const std::vector<std::size_t>& rows,
                               const AssemblyPlan* plan = nullptr);

/// Contribution of source patch `patch` only (columns of that patch).
DiscreteOperator assemble_localized(const ParametricSurface& surface,
                                    const WaveContext& ctx,
                                    const ComplexParamPoint& z,
                                    const QuadConfig& cfg, OperatorKind kernel,
                                    int patch);

struct OperatorNorms {
  double l1 = 0;
  double linf = 0;
  double l2 = 0;
};

/// Weighted operator norms with D = diag(|w|): l1 = max_j sum_i |M_ij||w_i|/|w_j|,
/// linf = max_i sum_j |M_ij|, l2 = largest singular value of D^1/2 M D^-1/2.
OperatorNorms op_norms(const DiscreteOperator& op);

/// Binary dump: "PBEM", u32 N, u32 flags, 4 zero bytes, then N*N
/// interleaved little-endian float64 (re, im) pairs in row-major order.
/// flags: low byte = OperatorKind, bit 8 set for a complex parameter point.
void save_operator(const DiscreteOperator& op, const std::filesystem::path& path);

struct LoadedOperator {
  MatrixXc matrix;
  OperatorKind kind;
  bool complex_parameter;
};

LoadedOperator load_operator(const std::filesystem::path& path);

}  // namespace parabem
