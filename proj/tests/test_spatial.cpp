#include "cortexgeo/spatial.hpp"
#include "cortexgeo/template_mesh.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace cortexgeo;

TEST_CASE("point index basics") {
  CHECK_THROWS_AS(PointIndex({}), ValidationError);

  const PointIndex single({Vec3(1, 2, 3)});
  const NearestHit hit = single.nearest(Vec3(9, 9, 9));
  CHECK(hit.index == 0);

  // duplicated points: query at the duplicate has distance 0
  const PointIndex dup({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1)});
  CHECK(dup.nearest(Vec3(1, 1, 1)).distance == 0.0);
}

TEST_CASE("nearest matches exhaustive scan on 1000 random points") {
  const auto pts = fixtures::random_points(1000, 21);
  const PointIndex index(pts);
  for (int q = 0; q < 300; ++q) {
    const Vec3 query(fixtures::uniform(5, q, 0, -0.2, 1.2),
                     fixtures::uniform(5, q, 1, -0.2, 1.2),
                     fixtures::uniform(5, q, 2, -0.2, 1.2));
    const NearestHit hit = index.nearest(query);
    CHECK(hit.index == oracles::exhaustive_nearest(pts, query));
  }
}

TEST_CASE("knn matches exhaustive scan, including exact ties on a grid") {
  std::vector<Vec3> grid;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y)
      for (int z = 0; z < 6; ++z) grid.emplace_back(x, y, z);
  const PointIndex index(grid);

  for (const Vec3& query :
       {Vec3(2.5, 2.5, 2.5), Vec3(3, 3, 3), Vec3(0.1, 4.7, 2.2)}) {
    for (Index k : {1, 5, 17}) {
      const auto hits = index.knn(query, k);
      const auto ref = oracles::exhaustive_knn(grid, query, k);
      REQUIRE(hits.size() == ref.size());
      for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].index == ref[i].second);
        CHECK(hits[i].distance == doctest::Approx(ref[i].first).epsilon(1e-12));
      }
    }
  }

  // k equal to the point count returns everything, sorted
  const auto all = index.knn(Vec3(0.5, 0.5, 0.5), index.size());
  CHECK(all.size() == grid.size());
  CHECK(std::is_sorted(all.begin(), all.end(), [](auto& a, auto& b) {
    return a.distance < b.distance;
  }));
  CHECK_THROWS_AS(index.knn(Vec3(0, 0, 0), index.size() + 1), ValidationError);
}

TEST_CASE("knn property: random queries equal exhaustive results") {
  const auto pts = fixtures::random_points(700, 33, -1, 1);
  const PointIndex index(pts);
  for (int q = 0; q < 60; ++q) {
    const Vec3 query(fixtures::uniform(8, q, 0, -1, 1),
                     fixtures::uniform(8, q, 1, -1, 1),
                     fixtures::uniform(8, q, 2, -1, 1));
    const Index k = 1 + static_cast<Index>(counter_bits(9, q, 0) % 20);
    const auto hits = index.knn(query, k);
    const auto ref = oracles::exhaustive_knn(pts, query, k);
    for (std::size_t i = 0; i < hits.size(); ++i)
      CHECK(hits[i].index == ref[i].second);
  }
}

TEST_CASE("closest point on triangle: analytic projection") {
  const Vec3 a(0, 0, 0), b(2, 0, 0), c(0, 2, 0);
  // above the interior: foot of the perpendicular
  CHECK((closest_point_on_triangle(Vec3(0.5, 0.5, 3), a, b, c) -
         Vec3(0.5, 0.5, 0)).norm() < 1e-15);
  // beyond an edge
  CHECK((closest_point_on_triangle(Vec3(1, -1, 0), a, b, c) - Vec3(1, 0, 0))
            .norm() < 1e-15);
  // beyond a vertex
  CHECK((closest_point_on_triangle(Vec3(-1, -1, 5), a, b, c) - a).norm() < 1e-15);
}

TEST_CASE("surface index equals exhaustive face scan") {
  const Mesh sphere = make_icosphere(3);
  const SurfaceIndex index(sphere);

  // on-surface queries have distance ~0
  CHECK(index.closest_point(sphere.vertices[17]).distance < 1e-12);

  // sphere center: distance is the face inradius gap, below 1
  const SurfaceHit center = index.closest_point(Vec3::Zero());
  CHECK(center.distance < 1.0);
  CHECK(center.distance ==
        doctest::Approx(oracles::exhaustive_surface_distance(sphere, Vec3::Zero()))
            .epsilon(1e-14));

  for (int q = 0; q < 120; ++q) {
    const Vec3 query(fixtures::uniform(77, q, 0, -1.5, 1.5),
                     fixtures::uniform(77, q, 1, -1.5, 1.5),
                     fixtures::uniform(77, q, 2, -1.5, 1.5));
    const double exact = oracles::exhaustive_surface_distance(sphere, query);
    CHECK(index.closest_point(query).distance == doctest::Approx(exact).epsilon(1e-14));
  }
}

TEST_CASE("closest surface distance lower-bounds sampled point distances") {
  const Mesh mesh = fixtures::bumpy_sphere(3);
  const SurfaceIndex index(mesh);
  const SampledCloud samples = sample_surface(mesh, 2000, 3);
  const Vec3 query(0.3, -1.4, 0.8);
  const double exact = index.closest_point(query).distance;
  for (const Vec3& p : samples.points) CHECK(exact <= (p - query).norm() + 1e-12);
}

TEST_CASE("segment and triangle distance primitives") {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  // crossing segment: distance 0 up to the crossing-point rounding
  CHECK(segment_triangle_sq_distance(Vec3(0.2, 0.2, -1), Vec3(0.2, 0.2, 1), a, b, c) <
        1e-30);
  // parallel above the plane
  CHECK(segment_triangle_sq_distance(Vec3(0.2, 0.2, 0.5), Vec3(0.4, 0.2, 0.5), a, b,
                                     c) == doctest::Approx(0.25).epsilon(1e-12));
  // coplanar inside (containment case)
  CHECK(segment_triangle_sq_distance(Vec3(0.1, 0.1, 0), Vec3(0.3, 0.3, 0), a, b, c) ==
        0.0);
  // segment-segment
  CHECK(segment_segment_sq_distance(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 1),
                                    Vec3(1, 1, 1)) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("triangle intersection predicate on hand-built cases") {
  const double eps = 1e-10;
  const Vec3 a0(0, 0, 0), a1(2, 0, 0), a2(0, 2, 0);
  // piercing triangle
  CHECK(triangles_intersect(a0, a1, a2, Vec3(0.5, 0.5, -1), Vec3(0.5, 0.5, 1),
                            Vec3(1.5, 0.5, 1), eps));
  // clearly disjoint (parallel planes)
  CHECK_FALSE(triangles_intersect(a0, a1, a2, Vec3(0, 0, 1), Vec3(1, 0, 1),
                                  Vec3(0, 1, 1), eps));
  // coplanar overlapping
  CHECK(triangles_intersect(a0, a1, a2, Vec3(0.2, 0.2, 0), Vec3(0.8, 0.2, 0),
                            Vec3(0.2, 0.8, 0), eps));
  // coplanar disjoint
  CHECK_FALSE(triangles_intersect(a0, a1, a2, Vec3(5, 5, 0), Vec3(6, 5, 0),
                                  Vec3(5, 6, 0), eps));
  // touching exactly at a point counts as intersecting (conservative)
  CHECK(triangles_intersect(a0, a1, a2, Vec3(1, 1, 0), Vec3(2, 2, 1), Vec3(3, 1, 1),
                            eps));
}

TEST_CASE("self intersections: clean meshes and constructed overlap") {
  // two disjoint icospheres as one mesh: empty list
  Mesh two = make_icosphere(2);
  const Index off = two.vertex_count();
  const Mesh other = make_icosphere(2);
  for (const Vec3& v : other.vertices) two.vertices.push_back(v + Vec3(5, 0, 0));
  for (const auto& f : other.faces)
    two.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  CHECK(self_intersections(two).empty());

  // two hand-placed interpenetrating triangles
  Mesh crossing;
  crossing.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0},
                       {0.5, 0.5, -1}, {0.5, 0.5, 1}, {1.5, 0.5, 1}};
  crossing.faces = {{0, 1, 2}, {3, 4, 5}};
  const auto pairs = self_intersections(crossing);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::pair<Index, Index>{0, 1});
}

TEST_CASE("self intersections match brute force on a perturbed mesh") {
  const Mesh mesh = fixtures::jittered(make_icosphere(2), 0.08, 5);
  const auto fast = self_intersections(mesh);

  std::vector<std::pair<Index, Index>> brute;
  for (Index i = 0; i < mesh.face_count(); ++i)
    for (Index j = i + 1; j < mesh.face_count(); ++j) {
      const auto& fa = mesh.faces[i];
      const auto& fb = mesh.faces[j];
      bool shared = false;
      for (Index u : fa)
        for (Index v : fb) shared |= (u == v);
      if (shared) continue;
      if (triangles_intersect(mesh.vertices[fa[0]], mesh.vertices[fa[1]],
                              mesh.vertices[fa[2]], mesh.vertices[fb[0]],
                              mesh.vertices[fb[1]], mesh.vertices[fb[2]], 1e-10))
        brute.emplace_back(i, j);
    }
  CHECK(fast == brute);
  CHECK(!fast.empty());  // the jitter is large enough to fold the sphere
}

TEST_CASE("self intersection report is stable under vertex relabeling") {
  Mesh mesh = fixtures::jittered(make_icosphere(1), 0.15, 9);
  const auto base = self_intersections(mesh);

  // reverse vertex order
  Mesh relabeled;
  const Index nv = mesh.vertex_count();
  relabeled.vertices.assign(mesh.vertices.rbegin(), mesh.vertices.rend());
  for (const auto& f : mesh.faces)
    relabeled.faces.push_back({nv - 1 - f[0], nv - 1 - f[1], nv - 1 - f[2]});
  const auto renamed = self_intersections(relabeled);
  CHECK(base.size() == renamed.size());
}
