#include "cortexgeo/template_mesh.hpp"

#include <cmath>
#include <limits>

namespace cortexgeo {

namespace {

// Vollmer HC parameters (alpha = pull toward original, beta = self share)
constexpr double kHcAlpha = 0.0;
constexpr double kHcBeta = 0.5;

double bbox_diagonal(const Mesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

}  // namespace

SmoothResult laplacian_smooth(const Mesh& mesh, const SmoothConfig& config) {
  validate(mesh);
  if (!is_edge_manifold(mesh))
    throw ValidationError("laplacian_smooth: mesh has non-manifold edges");
  if (!(config.lambda > 0.0 && config.lambda <= 1.0))
    throw ValidationError("laplacian_smooth: lambda must be in (0, 1]");
  if (config.max_iters < 0)
    throw ValidationError("laplacian_smooth: max_iters must be >= 0");

  const double eps =
      config.eps > 0.0 ? config.eps : 1e-6 * bbox_diagonal(mesh);
  const AdjacencyInfo adj = build_adjacency(mesh);

  SmoothResult result;
  result.mesh = mesh;
  const std::vector<Vec3>& original = mesh.vertices;
  std::vector<Vec3>& q = result.mesh.vertices;
  std::vector<Vec3> smoothed(q.size());
  std::vector<Vec3> correction(q.size());

  for (int iter = 0; iter < config.max_iters; ++iter) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto& nb = adj.neighbors[i];
      if (nb.empty()) {
        smoothed[i] = q[i];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (Index j : nb) mean += q[j];
      mean /= static_cast<double>(nb.size());
      smoothed[i] = q[i] + config.lambda * (mean - q[i]);
    }

    if (config.method == SmoothMethod::hc) {
      for (std::size_t i = 0; i < q.size(); ++i)
        correction[i] = smoothed[i] - (kHcAlpha * original[i] +
                                       (1.0 - kHcAlpha) * q[i]);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const auto& nb = adj.neighbors[i];
        Vec3 mean_b = Vec3::Zero();
        if (!nb.empty()) {
          for (Index j : nb) mean_b += correction[j];
          mean_b /= static_cast<double>(nb.size());
        }
        smoothed[i] -= kHcBeta * correction[i] + (1.0 - kHcBeta) * mean_b;
      }
    }

    double max_move = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      max_move = std::max(max_move, (smoothed[i] - q[i]).norm());
    q.swap(smoothed);
    ++result.iterations;
    if (max_move <= eps) break;
  }
  return result;
}

Mesh make_icosphere(int subdivisions, const std::array<double, 3>& radii) {
  if (subdivisions < 0 || subdivisions > 8)
    throw ValidationError("make_icosphere: subdivisions must be in [0, 8]");
  for (double r : radii)
    if (!(r > 0.0)) throw ValidationError("make_icosphere: radii must be positive");

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh mesh;
  mesh.vertices = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
  };
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (Vec3& v : mesh.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    mesh = subdivide_midpoint(mesh, 1);
    for (Vec3& v : mesh.vertices) v.normalize();
  }
  for (Vec3& v : mesh.vertices)
    v = Vec3(v.x() * radii[0], v.y() * radii[1], v.z() * radii[2]);
  return mesh;
}

}  // namespace cortexgeo
