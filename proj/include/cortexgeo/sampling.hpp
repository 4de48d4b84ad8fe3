#pragma once

#include "cortexgeo/mesh.hpp"

#include <cstdint>
#include <vector>

namespace cortexgeo {

// Oriented point set drawn from a mesh surface with face provenance and
// barycentric coordinates, so each point is a differentiable function of the
// three vertices of its source face: point = b0*v0 + b1*v1 + b2*v2.
struct SampledCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;          // unit
  std::vector<Index> face_id;         // -1 only for isolated vertices
  std::vector<Vec3> barycentric;      // nonnegative, sums to 1
  std::vector<double> curvature_weight;  // optional; empty when absent

  Index size() const { return static_cast<Index>(points.size()); }
  bool has_curvature() const { return !curvature_weight.empty(); }
};

// Area-weighted surface sampling. Face choice and the uniform simplex draw
// are keyed by (seed, point index), so output is identical across runs and
// thread counts. Normals are face normals; vertex_scalars (when given) are
// interpolated barycentrically into curvature_weight.
SampledCloud sample_surface(const Mesh& mesh, Index n, std::uint64_t seed,
                            const std::vector<double>* vertex_scalars = nullptr);

// Vertex-resolution cloud: points are the vertices themselves (one-hot
// barycentric on an incident face), normals are area-weighted vertex normals.
SampledCloud resample_as_vertices(const Mesh& mesh,
                                  const std::vector<double>* vertex_scalars = nullptr);

// Deterministic without-replacement subset of a cloud (used to level
// ground-truth clouds to a common size).
SampledCloud subsample_cloud(const SampledCloud& cloud, Index n, std::uint64_t seed);

// Recomputes points (and face normals, for area-sampled clouds) from moved
// vertices while keeping face provenance and barycentric weights fixed.
void update_cloud_geometry(SampledCloud& cloud, const Mesh& mesh);

}  // namespace cortexgeo
