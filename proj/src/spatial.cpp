#include "cortexgeo/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace cortexgeo {

// ------------------------------------------------------------ primitives

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return a + v * ab + w * ac;
}

double segment_segment_sq_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                   const Vec3& q1) {
  // Ericson 5.1.9 (clamped closest points of two segments)
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double tiny = 1e-30;
  if (a <= tiny && e <= tiny) {
    return r.squaredNorm();
  }
  if (a <= tiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= tiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > tiny ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p0 + s * d1 - (q0 + t * d2)).squaredNorm();
}

double segment_triangle_sq_distance(const Vec3& s0, const Vec3& s1, const Vec3& a,
                                    const Vec3& b, const Vec3& c) {
  double best = std::min((s0 - closest_point_on_triangle(s0, a, b, c)).squaredNorm(),
                         (s1 - closest_point_on_triangle(s1, a, b, c)).squaredNorm());
  best = std::min(best, segment_segment_sq_distance(s0, s1, a, b));
  best = std::min(best, segment_segment_sq_distance(s0, s1, b, c));
  best = std::min(best, segment_segment_sq_distance(s0, s1, c, a));
  // interior crossing of the triangle plane
  const Vec3 n = (b - a).cross(c - a);
  const double da = n.dot(s0 - a), db = n.dot(s1 - a);
  if ((da > 0.0) != (db > 0.0) && da != db) {
    const double t = da / (da - db);
    if (t >= 0.0 && t <= 1.0) {
      const Vec3 p = s0 + t * (s1 - s0);
      best = std::min(best, (p - closest_point_on_triangle(p, a, b, c)).squaredNorm());
    }
  }
  return best;
}

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2,
                         double eps) {
  // Two triangle regions meet iff some edge of one comes within eps of the
  // other region; this covers piercing, touching, coplanar overlap, and
  // containment (contained edges lie at distance zero).
  const double e2 = eps * eps;
  if (segment_triangle_sq_distance(a0, a1, b0, b1, b2) <= e2) return true;
  if (segment_triangle_sq_distance(a1, a2, b0, b1, b2) <= e2) return true;
  if (segment_triangle_sq_distance(a2, a0, b0, b1, b2) <= e2) return true;
  if (segment_triangle_sq_distance(b0, b1, a0, a1, a2) <= e2) return true;
  if (segment_triangle_sq_distance(b1, b2, a0, a1, a2) <= e2) return true;
  if (segment_triangle_sq_distance(b2, b0, a0, a1, a2) <= e2) return true;
  return false;
}

// ------------------------------------------------------------ PointIndex

namespace {

constexpr Index kLeafSize = 16;

int widest_axis(const std::vector<Vec3>& pts, const std::vector<Index>& order,
                Index begin, Index end) {
  Vec3 lo = pts[order[begin]], hi = lo;
  for (Index i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts[order[i]]);
    hi = hi.cwiseMax(pts[order[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  return axis;
}

}  // namespace

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("PointIndex: empty point set");
  for (const Vec3& p : points_)
    if (!p.allFinite()) throw ValidationError("PointIndex: non-finite point");
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<Index>(i);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<Index>(points_.size()));
}

Index PointIndex::build(Index begin, Index end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    nodes_.push_back(node);
    return static_cast<Index>(nodes_.size() - 1);
  }
  const int axis = widest_axis(points_, order_, begin, end);
  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](Index lhs, Index rhs) {
                     const double cl = points_[lhs][axis], cr = points_[rhs][axis];
                     return cl < cr || (cl == cr && lhs < rhs);
                   });
  node.axis = axis;
  node.split = points_[order_[mid]][axis];
  const Index self = static_cast<Index>(nodes_.size());
  nodes_.push_back(node);
  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void PointIndex::nearest_rec(Index ni, const Vec3& q, double& best_d2,
                             Index& best_idx) const {
  const Node& node = nodes_[ni];
  if (node.axis < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const Index near = delta < 0.0 ? node.left : node.right;
  const Index far = delta < 0.0 ? node.right : node.left;
  nearest_rec(near, q, best_d2, best_idx);
  if (delta * delta <= best_d2) nearest_rec(far, q, best_d2, best_idx);
}

NearestHit PointIndex::nearest(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  Index best_idx = std::numeric_limits<Index>::max();
  nearest_rec(root_, query, best_d2, best_idx);
  return {best_idx, std::sqrt(best_d2)};
}

std::vector<NearestHit> PointIndex::knn(const Vec3& query, Index k) const {
  if (k < 1 || k > size())
    throw ValidationError("knn: k out of range [1, point count]");

  using Entry = std::pair<double, Index>;  // (squared distance, index)
  std::priority_queue<Entry> heap;         // max-heap on (d2, index)

  auto consider = [&](Index idx) {
    const double d2 = (points_[idx] - query).squaredNorm();
    const Entry e{d2, idx};
    if (static_cast<Index>(heap.size()) < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  };

  // iterative traversal, nearer child first
  std::vector<Index> stack{root_};
  while (!stack.empty()) {
    const Index ni = stack.back();
    stack.pop_back();
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (Index i = node.begin; i < node.end; ++i) consider(order_[i]);
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const Index near = delta < 0.0 ? node.left : node.right;
    const Index far = delta < 0.0 ? node.right : node.left;
    if (static_cast<Index>(heap.size()) < k || delta * delta <= heap.top().first)
      stack.push_back(far);
    stack.push_back(near);
  }

  std::vector<NearestHit> hits(static_cast<std::size_t>(k));
  for (Index i = k - 1; i >= 0; --i) {
    const auto [d2, idx] = heap.top();
    heap.pop();
    hits[static_cast<std::size_t>(i)] = {idx, std::sqrt(d2)};
  }
  return hits;
}

// ------------------------------------------------------------ SurfaceIndex

namespace {

constexpr Index kBvhLeafSize = 4;

inline double aabb_sq_distance(const Vec3& lo, const Vec3& hi, const Vec3& q) {
  const Vec3 d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

SurfaceIndex::SurfaceIndex(const Mesh& mesh) : mesh_(mesh) {
  validate(mesh_);
  if (mesh_.faces.empty()) throw ValidationError("SurfaceIndex: mesh has no faces");
  const Index nf = mesh_.face_count();
  order_.resize(nf);
  centroids_.resize(nf);
  for (Index f = 0; f < nf; ++f) {
    order_[f] = f;
    const auto& tri = mesh_.faces[f];
    centroids_[f] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] +
                     mesh_.vertices[tri[2]]) /
                    3.0;
  }
  nodes_.reserve(2 * nf / kBvhLeafSize + 2);
  root_ = build(0, nf);
}

Index SurfaceIndex::build(Index begin, Index end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (Index i = begin; i < end; ++i) {
    const auto& tri = mesh_.faces[order_[i]];
    for (Index k : tri) {
      node.lo = node.lo.cwiseMin(mesh_.vertices[k]);
      node.hi = node.hi.cwiseMax(mesh_.vertices[k]);
    }
  }
  const Index self = static_cast<Index>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin > kBvhLeafSize) {
    int axis = 0;
    (node.hi - node.lo).maxCoeff(&axis);
    const Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](Index lhs, Index rhs) {
                       const double cl = centroids_[lhs][axis];
                       const double cr = centroids_[rhs][axis];
                       return cl < cr || (cl == cr && lhs < rhs);
                     });
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
  }
  return self;
}

SurfaceHit SurfaceIndex::closest_point(const Vec3& query) const {
  SurfaceHit best;
  double best_d2 = std::numeric_limits<double>::infinity();
  best.face = std::numeric_limits<Index>::max();

  std::vector<std::pair<double, Index>> stack;  // (node lower bound, node)
  stack.emplace_back(0.0, root_);
  while (!stack.empty()) {
    const auto [bound, ni] = stack.back();
    stack.pop_back();
    if (bound > best_d2) continue;
    const Node& node = nodes_[ni];
    if (node.left < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index f = order_[i];
        const auto& tri = mesh_.faces[f];
        const Vec3 cp = closest_point_on_triangle(query, mesh_.vertices[tri[0]],
                                                  mesh_.vertices[tri[1]],
                                                  mesh_.vertices[tri[2]]);
        const double d2 = (cp - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && f < best.face)) {
          best_d2 = d2;
          best.face = f;
          best.point = cp;
        }
      }
      continue;
    }
    const double dl = aabb_sq_distance(nodes_[node.left].lo, nodes_[node.left].hi, query);
    const double dr =
        aabb_sq_distance(nodes_[node.right].lo, nodes_[node.right].hi, query);
    // push farther child first so the nearer one is processed next
    if (dl <= dr) {
      if (dr <= best_d2) stack.emplace_back(dr, node.right);
      if (dl <= best_d2) stack.emplace_back(dl, node.left);
    } else {
      if (dl <= best_d2) stack.emplace_back(dl, node.left);
      if (dr <= best_d2) stack.emplace_back(dr, node.right);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

// ------------------------------------------------------- self intersection

namespace {

struct FaceBox {
  Vec3 lo, hi;
};

bool share_vertex(const std::array<Index, 3>& a, const std::array<Index, 3>& b) {
  for (Index i : a)
    for (Index j : b)
      if (i == j) return true;
  return false;
}

}  // namespace

std::vector<std::pair<Index, Index>> self_intersections(const Mesh& mesh,
                                                        double eps) {
  validate(mesh);
  std::vector<std::pair<Index, Index>> result;
  const Index nf = mesh.face_count();
  if (nf < 2) return result;

  std::vector<FaceBox> boxes(nf);
  for (Index f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    FaceBox b{mesh.vertices[tri[0]], mesh.vertices[tri[0]]};
    for (int k = 1; k < 3; ++k) {
      b.lo = b.lo.cwiseMin(mesh.vertices[tri[k]]);
      b.hi = b.hi.cwiseMax(mesh.vertices[tri[k]]);
    }
    b.lo.array() -= eps;
    b.hi.array() += eps;
    boxes[f] = b;
  }

  // sweep over the axis with the widest spread of box minima
  Vec3 lo = boxes[0].lo, hi = boxes[0].lo;
  for (const auto& b : boxes) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.lo);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  std::vector<Index> by_min(nf);
  for (Index f = 0; f < nf; ++f) by_min[f] = f;
  std::sort(by_min.begin(), by_min.end(), [&](Index a, Index b) {
    return boxes[a].lo[axis] < boxes[b].lo[axis] ||
           (boxes[a].lo[axis] == boxes[b].lo[axis] && a < b);
  });

  for (Index i = 0; i < nf; ++i) {
    const Index fa = by_min[i];
    const double amax = boxes[fa].hi[axis];
    for (Index j = i + 1; j < nf; ++j) {
      const Index fb = by_min[j];
      if (boxes[fb].lo[axis] > amax) break;
      if ((boxes[fa].lo.array() > boxes[fb].hi.array()).any() ||
          (boxes[fb].lo.array() > boxes[fa].hi.array()).any())
        continue;
      if (share_vertex(mesh.faces[fa], mesh.faces[fb])) continue;
      const auto& ta = mesh.faces[fa];
      const auto& tb = mesh.faces[fb];
      if (triangles_intersect(mesh.vertices[ta[0]], mesh.vertices[ta[1]],
                              mesh.vertices[ta[2]], mesh.vertices[tb[0]],
                              mesh.vertices[tb[1]], mesh.vertices[tb[2]], eps))
        result.emplace_back(std::min(fa, fb), std::max(fa, fb));
    }
  }
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

}  // namespace cortexgeo
