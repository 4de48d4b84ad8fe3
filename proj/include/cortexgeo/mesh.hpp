#pragma once

#include "cortexgeo/types.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace cortexgeo {

// Indexed triangle surface. Faces follow a counter-clockwise orientation
// convention; the edge set is always derived from the face list.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 3>> faces;

  Index vertex_count() const { return static_cast<Index>(vertices.size()); }
  Index face_count() const { return static_cast<Index>(faces.size()); }
  bool empty() const { return vertices.empty(); }
};

// Throws ValidationError if a face index is out of range, a face repeats a
// vertex index, or a coordinate is not finite.
void validate(const Mesh& mesh);

struct AdjacencyInfo {
  std::vector<std::pair<Index, Index>> edges;  // i < j, sorted lexicographically
  std::vector<std::vector<Index>> neighbors;   // per vertex, sorted ascending
  std::vector<Index> degree;

  Index edge_count() const { return static_cast<Index>(edges.size()); }
};

AdjacencyInfo build_adjacency(const Mesh& mesh);

// True when every edge is shared by at most two faces.
bool is_edge_manifold(const Mesh& mesh);

struct TopologyReport {
  Index vertex_count = 0;
  Index edge_count = 0;
  Index face_count = 0;
  long long euler_characteristic = 0;  // V - E + F
  Index connected_components = 0;
  Index boundary_edge_count = 0;
  // Genus per component (component order: ascending smallest vertex id).
  // Absent for components with boundary edges or non-manifold edges.
  std::vector<std::optional<int>> component_genus;

  // Sum over closed components; absent when any component's genus is.
  std::optional<int> total_genus() const;
};

TopologyReport topology_report(const Mesh& mesh);

struct NormalSet {
  std::vector<Vec3> face_normals;    // unit, zero for degenerate faces
  std::vector<Vec3> vertex_normals;  // area-weighted, unit, zero if undefined
  std::vector<Index> degenerate_faces;
};

NormalSet vertex_and_face_normals(const Mesh& mesh);

// out(i) = mean over neighbors of field - field(i); zero for isolated vertices.
// This is the uniform Laplacian D^{-1}A - I applied to a per-vertex field.
std::vector<Vec3> uniform_laplacian_apply(const AdjacencyInfo& adj,
                                          const std::vector<Vec3>& field);

// Midpoint subdivision: V' = V + E, F' = 4F per level. Geometry, genus and
// connectivity class are unchanged (no smoothing).
Mesh subdivide_midpoint(const Mesh& mesh, int levels);

}  // namespace cortexgeo
