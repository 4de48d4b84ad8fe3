#include "cortexgeo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

namespace cortexgeo {

void validate(const Mesh& mesh) {
  const Index nv = mesh.vertex_count();
  for (const Vec3& v : mesh.vertices) {
    if (!v.allFinite())
      throw ValidationError("mesh: non-finite vertex coordinate");
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    for (Index k : tri) {
      if (k < 0 || k >= nv)
        throw ValidationError("mesh: face " + std::to_string(f) +
                              " references vertex " + std::to_string(k) +
                              " out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw ValidationError("mesh: face " + std::to_string(f) +
                            " repeats a vertex index");
  }
}

namespace {

// Unordered edge key with i < j.
inline std::pair<Index, Index> edge_key(Index a, Index b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

std::vector<std::pair<Index, Index>> sorted_unique_edges(const Mesh& mesh) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    edges.push_back(edge_key(f[0], f[1]));
    edges.push_back(edge_key(f[1], f[2]));
    edges.push_back(edge_key(f[2], f[0]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

AdjacencyInfo build_adjacency(const Mesh& mesh) {
  AdjacencyInfo adj;
  adj.edges = sorted_unique_edges(mesh);
  adj.neighbors.assign(mesh.vertices.size(), {});
  for (const auto& [i, j] : adj.edges) {
    adj.neighbors[i].push_back(j);
    adj.neighbors[j].push_back(i);
  }
  for (auto& nb : adj.neighbors) std::sort(nb.begin(), nb.end());
  adj.degree.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < adj.neighbors.size(); ++i)
    adj.degree[i] = static_cast<Index>(adj.neighbors[i].size());
  return adj;
}

bool is_edge_manifold(const Mesh& mesh) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    edges.push_back(edge_key(f[0], f[1]));
    edges.push_back(edge_key(f[1], f[2]));
    edges.push_back(edge_key(f[2], f[0]));
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 0; i + 2 < edges.size(); ++i)
    if (edges[i] == edges[i + 2]) return false;
  return true;
}

std::optional<int> TopologyReport::total_genus() const {
  int total = 0;
  for (const auto& g : component_genus) {
    if (!g) return std::nullopt;
    total += *g;
  }
  return total;
}

TopologyReport topology_report(const Mesh& mesh) {
  validate(mesh);
  TopologyReport rep;
  rep.vertex_count = mesh.vertex_count();
  rep.face_count = mesh.face_count();

  // Edge list with per-edge face multiplicity.
  std::map<std::pair<Index, Index>, Index> edge_faces;
  for (const auto& f : mesh.faces) {
    ++edge_faces[edge_key(f[0], f[1])];
    ++edge_faces[edge_key(f[1], f[2])];
    ++edge_faces[edge_key(f[2], f[0])];
  }
  rep.edge_count = static_cast<Index>(edge_faces.size());
  rep.euler_characteristic = static_cast<long long>(rep.vertex_count) -
                             rep.edge_count + rep.face_count;

  UnionFind uf(rep.vertex_count);
  for (const auto& [e, n] : edge_faces) uf.unite(e.first, e.second);

  // Component ids in order of smallest vertex id.
  std::vector<Index> root_of(mesh.vertices.size());
  std::map<Index, Index> comp_id;
  for (Index v = 0; v < rep.vertex_count; ++v) {
    root_of[v] = uf.find(v);
    comp_id.emplace(root_of[v], static_cast<Index>(comp_id.size()));
  }
  rep.connected_components = static_cast<Index>(comp_id.size());

  const std::size_t nc = comp_id.size();
  std::vector<long long> cv(nc, 0), ce(nc, 0), cf(nc, 0);
  std::vector<bool> closed(nc, true);
  for (Index v = 0; v < rep.vertex_count; ++v) ++cv[comp_id[root_of[v]]];
  for (const auto& [e, n] : edge_faces) {
    const Index c = comp_id[root_of[e.first]];
    ++ce[c];
    if (n == 1) {
      ++rep.boundary_edge_count;
      closed[c] = false;
    } else if (n > 2) {
      closed[c] = false;  // non-manifold edge: genus undefined
    }
  }
  for (const auto& f : mesh.faces) ++cf[comp_id[root_of[f[0]]]];

  rep.component_genus.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (!closed[c] || cf[c] == 0) continue;
    const long long chi = cv[c] - ce[c] + cf[c];
    if ((2 - chi) % 2 != 0 || chi > 2) continue;
    rep.component_genus[c] = static_cast<int>((2 - chi) / 2);
  }
  return rep;
}

NormalSet vertex_and_face_normals(const Mesh& mesh) {
  validate(mesh);
  NormalSet ns;
  ns.face_normals.resize(mesh.faces.size());
  ns.vertex_normals.assign(mesh.vertices.size(), Vec3::Zero());

  std::vector<Vec3> weighted(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3 cross = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                           .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    const double len = cross.norm();
    if (len < 1e-150) {
      ns.face_normals[f] = Vec3::Zero();
      ns.degenerate_faces.push_back(static_cast<Index>(f));
      continue;
    }
    ns.face_normals[f] = cross / len;
    for (Index k : tri) weighted[k] += cross;  // |cross| = 2*area
  }
  for (std::size_t v = 0; v < weighted.size(); ++v) {
    const double len = weighted[v].norm();
    ns.vertex_normals[v] = len < 1e-150 ? Vec3::Zero() : Vec3(weighted[v] / len);
  }
  return ns;
}

std::vector<Vec3> uniform_laplacian_apply(const AdjacencyInfo& adj,
                                          const std::vector<Vec3>& field) {
  if (field.size() != adj.neighbors.size())
    throw ValidationError("uniform_laplacian_apply: field length mismatch");
  std::vector<Vec3> out(field.size(), Vec3::Zero());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto& nb = adj.neighbors[i];
    if (nb.empty()) continue;
    Vec3 sum = Vec3::Zero();
    for (Index j : nb) sum += field[j];
    out[i] = sum / static_cast<double>(nb.size()) - field[i];
  }
  return out;
}

Mesh subdivide_midpoint(const Mesh& mesh, int levels) {
  if (levels < 1) throw ValidationError("subdivide_midpoint: levels must be >= 1");
  validate(mesh);
  Mesh cur = mesh;
  for (int lvl = 0; lvl < levels; ++lvl) {
    const auto edges = sorted_unique_edges(cur);
    const std::int64_t nv = cur.vertex_count();
    if (nv + static_cast<std::int64_t>(edges.size()) >
        std::numeric_limits<Index>::max())
      throw NumericError("subdivide_midpoint: vertex index overflow");

    Mesh next;
    next.vertices = cur.vertices;
    next.vertices.reserve(nv + edges.size());
    for (const auto& [i, j] : edges)
      next.vertices.push_back(0.5 * (cur.vertices[i] + cur.vertices[j]));

    auto midpoint_of = [&](Index a, Index b) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), edge_key(a, b));
      return static_cast<Index>(nv + (it - edges.begin()));
    };

    next.faces.reserve(cur.faces.size() * 4);
    for (const auto& f : cur.faces) {
      const Index mab = midpoint_of(f[0], f[1]);
      const Index mbc = midpoint_of(f[1], f[2]);
      const Index mca = midpoint_of(f[2], f[0]);
      next.faces.push_back({f[0], mab, mca});
      next.faces.push_back({f[1], mbc, mab});
      next.faces.push_back({f[2], mca, mbc});
      next.faces.push_back({mab, mbc, mca});
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace cortexgeo
