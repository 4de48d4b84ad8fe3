#pragma once

#include "cortexgeo/mesh.hpp"

#include <vector>

namespace cortexgeo {

struct CurvatureField {
  std::vector<double> mean_curvature;  // |H|, absolute discrete mean curvature
  std::vector<double> mixed_area;      // Voronoi area with obtuse correction
  std::vector<Index> flagged;          // vertices with floored mixed area
};

// Cotangent-formula discrete mean curvature, |H|(i) = ||K(i)|| / 2 with
// K(i) = (1 / (2 A_mixed)) sum_j (cot a_ij + cot b_ij)(x_i - x_j).
// Cotangents are clamped to [-1e4, 1e4] and mixed areas floored at 1e-12 to
// survive sliver triangles. Rejects meshes with non-manifold edges.
CurvatureField mean_curvature(const Mesh& mesh);

// kappa(p) = min(1 + curv(p), kappa_max); requires kappa_max >= 1.
std::vector<double> curvature_weight(const CurvatureField& curv, double kappa_max);

}  // namespace cortexgeo
