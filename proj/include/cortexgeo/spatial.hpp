#pragma once

#include "cortexgeo/mesh.hpp"

#include <utility>
#include <vector>

namespace cortexgeo {

// Exact closest point on a triangle (interior, edge, or vertex case).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

// Squared distance between two segments [p0,p1] and [q0,q1].
double segment_segment_sq_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                   const Vec3& q1);

// Squared distance between segment [s0,s1] and the triangle region (a,b,c).
double segment_triangle_sq_distance(const Vec3& s0, const Vec3& s1, const Vec3& a,
                                    const Vec3& b, const Vec3& c);

// True when the two triangle regions come within eps of each other
// (touching and borderline contacts count as intersecting).
bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2,
                         double eps);

struct NearestHit {
  Index index = -1;
  double distance = 0.0;
};

// KD-tree over a fixed point set; widest-axis median splits. Queries match
// an exhaustive scan exactly, with distance ties broken by lower point index.
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vec3> points);

  Index size() const { return static_cast<Index>(points_.size()); }
  const std::vector<Vec3>& points() const { return points_; }

  NearestHit nearest(const Vec3& query) const;
  // Exactly the k smallest distances, ascending, ties by lower index.
  std::vector<NearestHit> knn(const Vec3& query, Index k) const;

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    Index begin = 0, end = 0;   // range in order_ (leaves)
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end);
  void nearest_rec(Index node, const Vec3& q, double& best_d2, Index& best_idx) const;

  std::vector<Vec3> points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Index root_ = -1;
};

struct SurfaceHit {
  Vec3 point = Vec3::Zero();
  Index face = -1;
  double distance = 0.0;
};

// BVH over the faces of a mesh for exact point-to-surface queries.
class SurfaceIndex {
 public:
  explicit SurfaceIndex(const Mesh& mesh);

  const Mesh& mesh() const { return mesh_; }

  SurfaceHit closest_point(const Vec3& query) const;

 private:
  struct Node {
    Vec3 lo, hi;
    Index begin = 0, end = 0;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end);

  Mesh mesh_;
  std::vector<Index> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
  Index root_ = -1;
};

// All pairs of intersecting faces that share no vertex, sorted by
// (min face id, max face id). eps guards borderline/coplanar contacts.
std::vector<std::pair<Index, Index>> self_intersections(const Mesh& mesh,
                                                        double eps = 1e-10);

}  // namespace cortexgeo
