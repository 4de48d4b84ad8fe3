#pragma once

#include "cortexgeo/mesh.hpp"
#include "cortexgeo/sampling.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cortexgeo {

// Nearest-neighbor assignments between two clouds, ties broken by lower
// point index. Gradients treat these assignments as locally constant.
struct NnPairing {
  std::vector<Index> gt_to_pred;
  std::vector<Index> pred_to_gt;
};

NnPairing nearest_pairing(const SampledCloud& pred, const SampledCloud& gt);

struct PointLossGrad {
  double value = 0.0;
  std::vector<Vec3> grad_points;  // w.r.t. predicted cloud points
};

struct VertexLossGrad {
  double value = 0.0;
  std::vector<Vec3> grad_vertices;  // w.r.t. predicted mesh vertices
  Index skipped = 0;                // degenerate-face contributions dropped
};

struct FieldLossGrad {
  double value = 0.0;
  std::vector<Vec3> grad_field;  // w.r.t. the per-vertex input field
};

// Curvature-weighted symmetric Chamfer: both directed terms are scaled by
// the ground-truth curvature weight (the weight of the matched gt point on
// the predicted side). gt must carry curvature weights.
PointLossGrad chamfer_curvature(const SampledCloud& pred, const SampledCloud& gt);

// kappa = 1 everywhere.
PointLossGrad chamfer_classic(const SampledCloud& pred, const SampledCloud& gt);

// 1 - cos between normals of matched points, both directions, averaged per
// side. Gradients flow through the predicted face normals only (gt normals
// and assignments are constants); pred_mesh is the cloud's source mesh.
VertexLossGrad inter_normal_consistency(const SampledCloud& pred,
                                        const SampledCloud& gt,
                                        const Mesh& pred_mesh);

// Sum over adjacent face pairs of 1 - cos of their normals.
VertexLossGrad intra_normal_consistency(const Mesh& mesh);

// (1/V) sum_i || (L d)_i || with L = D^{-1}A - I held constant.
FieldLossGrad laplacian_displacement(const AdjacencyInfo& adj,
                                     const std::vector<Vec3>& displacement);

// Same loss applied to absolute vertex coordinates.
FieldLossGrad laplacian_absolute(const AdjacencyInfo& adj,
                                 const std::vector<Vec3>& vertices);

// (1/|E|) sum over edges of squared length.
VertexLossGrad edge_loss(const AdjacencyInfo& adj, const std::vector<Vec3>& vertices);
VertexLossGrad edge_loss(const Mesh& mesh);

// Chain rule through the barycentric sampling map: routes per-point
// gradients to the vertices of each point's source face in the cloud's
// source mesh.
std::vector<Vec3> scatter_point_gradient(const SampledCloud& cloud,
                                         const std::vector<Vec3>& grad_points,
                                         const Mesh& mesh);

// ------------------------------------------------------------- composition

struct ClassWeights {
  double chamfer = 0.0;
  double inter_nc = 0.0;
  double laplacian = 0.0;
  double intra_nc = 0.0;
  double edge = 0.0;
};

struct LossWeights {
  std::map<std::string, ClassWeights> classes;

  const ClassWeights& at(const std::string& name) const;
};

// JSON schema: {"classes": {"<name>": {"chamfer": x, "inter_nc": x,
// "laplacian": x, "intra_nc": x, "edge": x}}}
LossWeights load_weights_json(std::istream& in);
LossWeights parse_weights_json(const std::string& text);
std::string weights_to_json(const LossWeights& weights);

enum class ChamferMode { curvature, classic };

struct LossBreakdownRow {
  int stage = 0;
  std::string class_name;
  double chamfer = 0.0;
  double inter_nc = 0.0;
  double laplacian = 0.0;
  double intra_nc = 0.0;
  double edge = 0.0;
  double weighted_total = 0.0;
};

struct LossBreakdown {
  std::vector<LossBreakdownRow> rows;
  double grand_total = 0.0;
};

// One (stage, class) contribution to the total mesh loss. pred_cloud points
// and normals must be consistent with mesh (see update_cloud_geometry).
struct StageClassTerm {
  int stage = 0;
  std::string class_name;
  const Mesh* mesh = nullptr;
  const AdjacencyInfo* adjacency = nullptr;           // previous-stage connectivity
  const std::vector<Vec3>* displacement = nullptr;
  const SampledCloud* pred_cloud = nullptr;
  const SampledCloud* gt_cloud = nullptr;
};

struct TotalLossResult {
  LossBreakdown breakdown;
  // weighted gradient w.r.t. each term's current vertex positions
  std::vector<std::vector<Vec3>> grad_vertices;
};

// Terms with zero weight are skipped and reported as 0 in the breakdown.
TotalLossResult total_mesh_loss(std::span<const StageClassTerm> terms,
                                const LossWeights& weights,
                                ChamferMode mode = ChamferMode::curvature,
                                bool with_gradients = true);

}  // namespace cortexgeo
