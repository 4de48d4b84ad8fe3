#include "cortexgeo/sampling.hpp"

#include "cortexgeo/parallel.hpp"
#include "cortexgeo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cortexgeo {

SampledCloud sample_surface(const Mesh& mesh, Index n, std::uint64_t seed,
                            const std::vector<double>* vertex_scalars) {
  validate(mesh);
  if (n < 1) throw ValidationError("sample_surface: n must be positive");
  if (vertex_scalars && vertex_scalars->size() != mesh.vertices.size())
    throw ValidationError("sample_surface: vertex_scalars length mismatch");

  const Index nf = mesh.face_count();
  std::vector<double> cumulative(nf);
  double total = 0.0;
  for (Index f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    total += 0.5 * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                       .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
                       .norm();
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw ValidationError("sample_surface: zero total area");

  SampledCloud cloud;
  cloud.points.resize(n);
  cloud.normals.resize(n);
  cloud.face_id.resize(n);
  cloud.barycentric.resize(n);
  if (vertex_scalars) cloud.curvature_weight.resize(n);

  par::parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const double u0 = counter_uniform(seed, static_cast<std::uint64_t>(i), 0);
      const double u1 = counter_uniform(seed, static_cast<std::uint64_t>(i), 1);
      const double u2 = counter_uniform(seed, static_cast<std::uint64_t>(i), 2);

      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u0 * total);
      const Index f = it == cumulative.end()
                          ? nf - 1
                          : static_cast<Index>(it - cumulative.begin());

      // uniform on the simplex via the square-root map
      const double su = std::sqrt(u1);
      const Vec3 bary(1.0 - su, su * (1.0 - u2), su * u2);

      const auto& tri = mesh.faces[f];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];

      cloud.face_id[i] = f;
      cloud.barycentric[i] = bary;
      cloud.points[i] = bary[0] * a + bary[1] * b + bary[2] * c;

      const Vec3 cross = (b - a).cross(c - a);
      const double len = cross.norm();
      cloud.normals[i] = len < 1e-150 ? Vec3::Zero() : Vec3(cross / len);

      if (vertex_scalars)
        cloud.curvature_weight[i] = bary[0] * (*vertex_scalars)[tri[0]] +
                                    bary[1] * (*vertex_scalars)[tri[1]] +
                                    bary[2] * (*vertex_scalars)[tri[2]];
    }
  });
  return cloud;
}

SampledCloud resample_as_vertices(const Mesh& mesh,
                                  const std::vector<double>* vertex_scalars) {
  validate(mesh);
  if (vertex_scalars && vertex_scalars->size() != mesh.vertices.size())
    throw ValidationError("resample_as_vertices: vertex_scalars length mismatch");

  const Index nv = mesh.vertex_count();
  // lowest-index incident face per vertex
  std::vector<Index> incident(nv, -1);
  for (Index f = 0; f < mesh.face_count(); ++f)
    for (Index k : mesh.faces[f])
      if (incident[k] < 0) incident[k] = f;

  const NormalSet normals = vertex_and_face_normals(mesh);

  SampledCloud cloud;
  cloud.points = mesh.vertices;
  cloud.normals = normals.vertex_normals;
  cloud.face_id.resize(nv);
  cloud.barycentric.resize(nv);
  if (vertex_scalars) cloud.curvature_weight = *vertex_scalars;

  for (Index v = 0; v < nv; ++v) {
    cloud.face_id[v] = incident[v];
    Vec3 bary = Vec3::Zero();
    if (incident[v] >= 0) {
      const auto& tri = mesh.faces[incident[v]];
      for (int k = 0; k < 3; ++k)
        if (tri[k] == v) bary[k] = 1.0;
    } else {
      bary[0] = 1.0;  // isolated vertex; no face to reference
    }
    cloud.barycentric[v] = bary;
  }
  return cloud;
}

SampledCloud subsample_cloud(const SampledCloud& cloud, Index n, std::uint64_t seed) {
  if (n < 1 || n > cloud.size())
    throw ValidationError("subsample_cloud: n out of range");
  std::vector<Index> pick(cloud.points.size());
  std::iota(pick.begin(), pick.end(), Index{0});
  // Fisher-Yates prefix with counter-based draws
  for (Index i = 0; i < n; ++i) {
    const auto r = counter_bits(seed, static_cast<std::uint64_t>(i), 7);
    const Index j = i + static_cast<Index>(r % static_cast<std::uint64_t>(
                                                   pick.size() - i));
    std::swap(pick[i], pick[j]);
  }
  pick.resize(n);
  std::sort(pick.begin(), pick.end());

  SampledCloud out;
  out.points.reserve(n);
  out.normals.reserve(n);
  out.face_id.reserve(n);
  out.barycentric.reserve(n);
  if (cloud.has_curvature()) out.curvature_weight.reserve(n);
  for (Index idx : pick) {
    out.points.push_back(cloud.points[idx]);
    out.normals.push_back(cloud.normals[idx]);
    out.face_id.push_back(cloud.face_id[idx]);
    out.barycentric.push_back(cloud.barycentric[idx]);
    if (cloud.has_curvature())
      out.curvature_weight.push_back(cloud.curvature_weight[idx]);
  }
  return out;
}

void update_cloud_geometry(SampledCloud& cloud, const Mesh& mesh) {
  par::parallel_for(cloud.size(), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Index f = cloud.face_id[i];
      if (f < 0) continue;
      const auto& tri = mesh.faces[f];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      const Vec3& bary = cloud.barycentric[i];
      cloud.points[i] = bary[0] * a + bary[1] * b + bary[2] * c;
      const Vec3 cross = (b - a).cross(c - a);
      const double len = cross.norm();
      cloud.normals[i] = len < 1e-150 ? Vec3::Zero() : Vec3(cross / len);
    }
  });
}

}  // namespace cortexgeo
