#pragma once

#include "cortexgeo/mesh.hpp"
#include "cortexgeo/rng.hpp"
#include "cortexgeo/sampling.hpp"
#include "cortexgeo/template_mesh.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace fixtures {

using cortexgeo::Index;
using cortexgeo::Mesh;
using cortexgeo::Vec3;

// Regular tetrahedron with unit edge length.
inline Mesh tetrahedron() {
  const double s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
  Mesh m;
  m.vertices = {{0, 0, 0},
                {1, 0, 0},
                {0.5, s3 / 2.0, 0},
                {0.5, s3 / 6.0, s6 / 3.0}};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {2, 0, 3}};
  return m;
}

inline Mesh icosahedron() { return cortexgeo::make_icosphere(0); }

// (n+1)^2 vertices in the z=0 plane, 2 n^2 triangles.
inline Mesh plane_grid(int n, double spacing = 1.0) {
  Mesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.emplace_back(i * spacing, j * spacing, 0.0);
  auto vid = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return m;
}

inline Mesh torus_grid(double big_r, double small_r, int nu, int nv) {
  Mesh m;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double theta = 2.0 * std::numbers::pi * i / nu;
      const double phi = 2.0 * std::numbers::pi * j / nv;
      const double w = big_r + small_r * std::cos(phi);
      m.vertices.emplace_back(w * std::cos(theta), w * std::sin(theta),
                              small_r * std::sin(phi));
    }
  auto vid = [nv](int i, int j) { return static_cast<Index>(i * nv + j); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const int i1 = (i + 1) % nu, j1 = (j + 1) % nv;
      m.faces.push_back({vid(i, j), vid(i1, j), vid(i1, j1)});
      m.faces.push_back({vid(i, j), vid(i1, j1), vid(i, j1)});
    }
  return m;
}

// Closed cylinder: lateral grid plus fan caps.
inline Mesh capped_cylinder(double radius, double height, int nu, int nv) {
  Mesh m;
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const double theta = 2.0 * std::numbers::pi * i / nu;
      m.vertices.emplace_back(radius * std::cos(theta), radius * std::sin(theta),
                              height * j / nv);
    }
  auto vid = [nu](int i, int j) { return static_cast<Index>(j * nu + i); };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const int i1 = (i + 1) % nu;
      m.faces.push_back({vid(i, j), vid(i1, j), vid(i1, j + 1)});
      m.faces.push_back({vid(i, j), vid(i1, j + 1), vid(i, j + 1)});
    }
  const Index bottom = m.vertex_count();
  m.vertices.emplace_back(0.0, 0.0, 0.0);
  const Index top = m.vertex_count();
  m.vertices.emplace_back(0.0, 0.0, height);
  for (int i = 0; i < nu; ++i) {
    const int i1 = (i + 1) % nu;
    m.faces.push_back({bottom, vid(i1, 0), vid(i, 0)});
    m.faces.push_back({top, vid(i, nv), vid(i1, nv)});
  }
  return m;
}

// Two tori joined by a triangular prism bridge: closed genus-2 surface.
inline Mesh double_torus() {
  const Mesh t1 = torus_grid(2.0, 0.5, 16, 8);
  Mesh m = t1;
  const Index off = m.vertex_count();
  const Mesh t2 = torus_grid(2.0, 0.5, 16, 8);
  for (const Vec3& v : t2.vertices) m.vertices.push_back(v + Vec3(6.0, 0, 0));
  for (const auto& f : t2.faces)
    m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});

  const auto fa = m.faces[0];
  const auto fb = m.faces[t1.face_count()];
  m.faces.erase(m.faces.begin() + t1.face_count());
  m.faces.erase(m.faces.begin());
  const Index a = fa[0], b = fa[1], c = fa[2];
  const Index d = fb[0], e = fb[1], f = fb[2];
  m.faces.push_back({a, b, d});
  m.faces.push_back({b, e, d});
  m.faces.push_back({b, c, e});
  m.faces.push_back({c, f, e});
  m.faces.push_back({c, a, f});
  m.faces.push_back({a, d, f});
  return m;
}

// r(theta, phi) = 1 + amp * sin(freq*theta) * sin(freq*phi) over an icosphere.
inline Mesh bumpy_sphere(int subdiv, double amp = 0.15, int freq = 6) {
  Mesh m = cortexgeo::make_icosphere(subdiv);
  for (Vec3& v : m.vertices) {
    const double theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
    const double phi = std::atan2(v.y(), v.x());
    const double r = 1.0 + amp * std::sin(freq * theta) * std::sin(freq * phi);
    v *= r;
  }
  return m;
}

inline double uniform(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream,
                      double lo, double hi) {
  return lo + (hi - lo) * cortexgeo::counter_uniform(seed, counter, stream);
}

inline Mesh jittered(const Mesh& mesh, double sigma, std::uint64_t seed) {
  Mesh out = mesh;
  for (std::size_t i = 0; i < out.vertices.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      // Box-Muller from counter draws
      const double u1 = cortexgeo::counter_uniform(seed, i, 10 + k);
      const double u2 = cortexgeo::counter_uniform(seed, i, 20 + k);
      const double g = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300))) *
                       std::cos(2.0 * std::numbers::pi * u2);
      out.vertices[i][k] += sigma * g;
    }
  return out;
}

inline std::vector<Vec3> random_points(Index n, std::uint64_t seed, double lo = 0.0,
                                       double hi = 1.0) {
  std::vector<Vec3> pts(n);
  for (Index i = 0; i < n; ++i)
    pts[i] = Vec3(uniform(seed, i, 0, lo, hi), uniform(seed, i, 1, lo, hi),
                  uniform(seed, i, 2, lo, hi));
  return pts;
}

// Free-standing cloud for loss tests (unit normals, optional kappa).
inline cortexgeo::SampledCloud make_cloud(const std::vector<Vec3>& points,
                                          std::uint64_t seed,
                                          bool with_kappa = false,
                                          double kappa_max = 5.0) {
  cortexgeo::SampledCloud c;
  c.points = points;
  c.normals.resize(points.size());
  c.face_id.assign(points.size(), -1);
  c.barycentric.assign(points.size(), Vec3(1, 0, 0));
  for (std::size_t i = 0; i < points.size(); ++i) {
    Vec3 n(uniform(seed, i, 5, -1, 1), uniform(seed, i, 6, -1, 1),
           uniform(seed, i, 7, -1, 1));
    if (n.norm() < 1e-6) n = Vec3(1, 0, 0);
    c.normals[i] = n.normalized();
  }
  if (with_kappa) {
    c.curvature_weight.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      c.curvature_weight[i] = uniform(seed, i, 8, 1.0, kappa_max);
  }
  return c;
}

}  // namespace fixtures
