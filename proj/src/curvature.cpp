#include "cortexgeo/curvature.hpp"

#include <algorithm>
#include <cmath>

namespace cortexgeo {

namespace {

constexpr double kCotClamp = 1e4;
constexpr double kAreaFloor = 1e-12;

double clamped_cot(const Vec3& u, const Vec3& v) {
  const double cross = u.cross(v).norm();
  if (cross < 1e-300) return kCotClamp;
  return std::clamp(u.dot(v) / cross, -kCotClamp, kCotClamp);
}

}  // namespace

CurvatureField mean_curvature(const Mesh& mesh) {
  validate(mesh);
  if (!is_edge_manifold(mesh))
    throw ValidationError("mean_curvature: mesh has non-manifold edges");

  const Index nv = mesh.vertex_count();
  CurvatureField field;
  field.mean_curvature.assign(nv, 0.0);
  field.mixed_area.assign(nv, 0.0);

  std::vector<Vec3> accum(nv, Vec3::Zero());
  for (const auto& tri : mesh.faces) {
    const Vec3& pa = mesh.vertices[tri[0]];
    const Vec3& pb = mesh.vertices[tri[1]];
    const Vec3& pc = mesh.vertices[tri[2]];
    // cotangent of the interior angle at each corner
    const double cot_a = clamped_cot(pb - pa, pc - pa);
    const double cot_b = clamped_cot(pc - pb, pa - pb);
    const double cot_c = clamped_cot(pa - pc, pb - pc);

    // angle at a corner is opposite the edge joining the other two
    accum[tri[0]] += cot_c * (pa - pb);
    accum[tri[1]] += cot_c * (pb - pa);
    accum[tri[1]] += cot_a * (pb - pc);
    accum[tri[2]] += cot_a * (pc - pb);
    accum[tri[2]] += cot_b * (pc - pa);
    accum[tri[0]] += cot_b * (pa - pc);

    // Meyer mixed area with obtuse correction
    const double area = 0.5 * (pb - pa).cross(pc - pa).norm();
    const bool obtuse_a = cot_a < 0.0, obtuse_b = cot_b < 0.0, obtuse_c = cot_c < 0.0;
    if (!obtuse_a && !obtuse_b && !obtuse_c) {
      field.mixed_area[tri[0]] +=
          0.125 * ((pa - pb).squaredNorm() * cot_c + (pa - pc).squaredNorm() * cot_b);
      field.mixed_area[tri[1]] +=
          0.125 * ((pb - pc).squaredNorm() * cot_a + (pb - pa).squaredNorm() * cot_c);
      field.mixed_area[tri[2]] +=
          0.125 * ((pc - pa).squaredNorm() * cot_b + (pc - pb).squaredNorm() * cot_a);
    } else {
      field.mixed_area[tri[0]] += obtuse_a ? area / 2.0 : area / 4.0;
      field.mixed_area[tri[1]] += obtuse_b ? area / 2.0 : area / 4.0;
      field.mixed_area[tri[2]] += obtuse_c ? area / 2.0 : area / 4.0;
    }
  }

  for (Index v = 0; v < nv; ++v) {
    if (field.mixed_area[v] < kAreaFloor) {
      field.flagged.push_back(v);
      field.mean_curvature[v] = 0.0;
      continue;
    }
    const Vec3 k = accum[v] / (2.0 * field.mixed_area[v]);
    field.mean_curvature[v] = 0.5 * k.norm();
  }
  return field;
}

std::vector<double> curvature_weight(const CurvatureField& curv, double kappa_max) {
  if (!(kappa_max >= 1.0))
    throw ValidationError("curvature_weight: kappa_max must be >= 1");
  std::vector<double> kappa(curv.mean_curvature.size());
  for (std::size_t i = 0; i < kappa.size(); ++i)
    kappa[i] = std::min(1.0 + curv.mean_curvature[i], kappa_max);
  return kappa;
}

}  // namespace cortexgeo
