#pragma once

#include "cortexgeo/mesh.hpp"

#include <array>

namespace cortexgeo {

enum class SmoothMethod { uniform, hc };

struct SmoothConfig {
  SmoothMethod method = SmoothMethod::hc;
  double lambda = 0.5;  // step factor in (0, 1]
  // convergence threshold on the max per-vertex move; <= 0 selects
  // 1e-6 * bounding-box diagonal
  double eps = 0.0;
  int max_iters = 10000;
};

struct SmoothResult {
  Mesh mesh;
  int iterations = 0;
};

// Iterated Laplacian smoothing until the surface stops moving. uniform is
// the plain neighbor-mean step; hc applies the Vollmer correction that
// subtracts the mean displacement to counter shrinkage. Jacobi-style
// double-buffered updates keep the result deterministic.
SmoothResult laplacian_smooth(const Mesh& mesh, const SmoothConfig& config);

// Icosahedron subdivided and projected onto the ellipsoid
// (x/a)^2 + (y/b)^2 + (z/c)^2 = 1. Vertex count is 10*4^n + 2.
Mesh make_icosphere(int subdivisions, const std::array<double, 3>& radii = {1, 1, 1});

}  // namespace cortexgeo
