#include "cortexgeo/metrics.hpp"

#include "cortexgeo/parallel.hpp"
#include "cortexgeo/rng.hpp"
#include "cortexgeo/sampling.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cortexgeo {

namespace {

std::vector<double> directed_distances(const Mesh& from, const SurfaceIndex& to,
                                       Index n_samples, std::uint64_t seed) {
  const SampledCloud cloud = sample_surface(from, n_samples, seed);
  std::vector<double> d(n_samples);
  par::parallel_for(n_samples, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      d[i] = to.closest_point(cloud.points[i]).distance;
  });
  return d;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return par::map_reduce(
             static_cast<std::int64_t>(v.size()), 0.0,
             [&](std::int64_t b, std::int64_t e) {
               double s = 0.0;
               for (std::int64_t i = b; i < e; ++i) s += v[i];
               return s;
             },
             [](double a, double b) { return a + b; }) /
         static_cast<double>(v.size());
}

double percentile_of_sorted(const std::vector<double>& sorted, double p) {
  // nearest-rank
  const std::size_t n = sorted.size();
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(n)));
  return sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
}

double quantile_linear(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

MetricsReport surface_metrics(const Mesh& a, const Mesh& b, Index n_samples,
                              std::uint64_t seed, double percentile,
                              const std::vector<double>& thresholds) {
  if (n_samples < 1) throw ValidationError("surface_metrics: n_samples must be >= 1");
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw ValidationError("surface_metrics: percentile must be in (0, 100]");
  const SurfaceIndex index_a(a);
  const SurfaceIndex index_b(b);

  const std::vector<double> d_ab = directed_distances(a, index_b, n_samples, seed);
  const std::vector<double> d_ba = directed_distances(b, index_a, n_samples, seed);

  MetricsReport rep;
  rep.sample_count = n_samples;
  rep.seed = seed;
  rep.hausdorff_percentile = percentile;
  rep.assd = 0.5 * (mean_of(d_ab) + mean_of(d_ba));

  std::vector<double> pooled;
  pooled.reserve(d_ab.size() + d_ba.size());
  pooled.insert(pooled.end(), d_ab.begin(), d_ab.end());
  pooled.insert(pooled.end(), d_ba.begin(), d_ba.end());
  std::sort(pooled.begin(), pooled.end());
  rep.hausdorff = percentile >= 100.0 ? pooled.back()
                                      : percentile_of_sorted(pooled, percentile);

  for (double t : thresholds) {
    const auto above = pooled.end() - std::upper_bound(pooled.begin(), pooled.end(), t);
    rep.frac_gt[t] =
        static_cast<double>(above) / static_cast<double>(pooled.size());
  }
  return rep;
}

double assd(const Mesh& a, const Mesh& b, Index n_samples, std::uint64_t seed) {
  return surface_metrics(a, b, n_samples, seed).assd;
}

double hausdorff(const Mesh& a, const Mesh& b, Index n_samples, std::uint64_t seed,
                 double percentile) {
  return surface_metrics(a, b, n_samples, seed, percentile).hausdorff;
}

std::vector<double> exceedance_fractions(const Mesh& a, const Mesh& b,
                                         Index n_samples, std::uint64_t seed,
                                         const std::vector<double>& thresholds) {
  const MetricsReport rep = surface_metrics(a, b, n_samples, seed, 100.0, thresholds);
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(rep.frac_gt.at(t));
  return out;
}

double mean_distance_to_surface(const std::vector<Vec3>& probes,
                                const SurfaceIndex& surface) {
  if (probes.empty()) throw ValidationError("mean_distance_to_surface: no probes");
  std::vector<double> d(probes.size());
  par::parallel_for(static_cast<std::int64_t>(probes.size()),
                    [&](std::int64_t b, std::int64_t e) {
                      for (std::int64_t i = b; i < e; ++i)
                        d[i] = surface.closest_point(probes[i]).distance;
                    });
  return mean_of(d);
}

Mesh RigidTransform::apply(const Mesh& mesh) const {
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = apply(v);
  return out;
}

namespace {

RigidTransform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  const double n = static_cast<double>(src.size());
  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += src[i];
    dst_mean += dst[i];
  }
  src_mean /= n;
  dst_mean /= n;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    h += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0
                                                                            : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = dst_mean - t.rotation * src_mean;
  return t;
}

}  // namespace

IcpResult icp_rigid(const std::vector<Vec3>& source, const SurfaceIndex& target,
                    int max_iters, double tol) {
  if (source.size() < 3) throw ValidationError("icp_rigid: need at least 3 points");
  {
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : source) mean += p;
    mean /= static_cast<double>(source.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : source) cov += (p - mean) * (p - mean).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
    if (svd.singularValues()(1) <= 1e-12 * std::max(svd.singularValues()(0), 1e-300))
      throw ValidationError("icp_rigid: source points are collinear or coincident");
  }

  IcpResult result;
  std::vector<Vec3> moved = source;
  std::vector<Vec3> corr(source.size());
  double prev_mse = std::numeric_limits<double>::infinity();

  // absolute floor: at exact alignment the MSE is pure rounding noise
  double spread2 = 0.0;
  {
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : source) mean += p;
    mean /= static_cast<double>(source.size());
    for (const Vec3& p : source) spread2 += (p - mean).squaredNorm();
    spread2 /= static_cast<double>(source.size());
  }
  const double mse_floor = 1e-24 * spread2;

  for (int iter = 1; iter <= max_iters; ++iter) {
    par::parallel_for(static_cast<std::int64_t>(moved.size()),
                      [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t i = b; i < e; ++i)
                          corr[i] = target.closest_point(moved[i]).point;
                      });
    // re-solve from the original source so rounding never accumulates
    const RigidTransform t = kabsch(source, corr);

    double mse = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      moved[i] = t.apply(source[i]);
      mse += (moved[i] - corr[i]).squaredNorm();
    }
    mse /= static_cast<double>(source.size());

    result.transform = t;
    result.iterations = iter;
    result.mean_squared_error = mse;
    result.mse_history.push_back(mse);
    if (mse <= mse_floor ||
        (iter > 1 && std::abs(prev_mse - mse) <= tol * std::max(prev_mse, 1e-30))) {
      result.converged = true;
      break;
    }
    prev_mse = mse;
  }
  return result;
}

ThicknessMap cortical_thickness(const Mesh& white, const Mesh& pial) {
  validate(white);
  if (pial.faces.empty())
    throw ValidationError("cortical_thickness: pial mesh has no faces");
  const SurfaceIndex pial_index(pial);

  ThicknessMap map;
  map.values.resize(white.vertices.size());
  par::parallel_for(static_cast<std::int64_t>(white.vertices.size()),
                    [&](std::int64_t b, std::int64_t e) {
                      for (std::int64_t i = b; i < e; ++i)
                        map.values[i] =
                            pial_index.closest_point(white.vertices[i]).distance;
                    });
  if (!map.values.empty()) {
    map.median = quantile_linear(map.values, 0.5);
    map.lower_quartile = quantile_linear(map.values, 0.25);
    map.upper_quartile = quantile_linear(map.values, 0.75);
  }
  return map;
}

ConsistencyReport consistency_report(
    const std::vector<std::pair<Mesh, Mesh>>& mesh_pairs, Index n_samples,
    std::uint64_t seed, const std::vector<double>& thresholds) {
  if (mesh_pairs.empty()) throw ValidationError("consistency_report: no pairs");

  ConsistencyReport rep;
  for (std::size_t k = 0; k < mesh_pairs.size(); ++k) {
    const auto& [first, second] = mesh_pairs[k];
    const SurfaceIndex target(first);
    const IcpResult icp = icp_rigid(second.vertices, target);
    const Mesh aligned = icp.transform.apply(second);
    rep.per_pair.push_back(surface_metrics(first, aligned, n_samples,
                                           hash_seed(seed, k), 100.0, thresholds));
  }

  const double n = static_cast<double>(rep.per_pair.size());
  for (const auto& m : rep.per_pair) {
    rep.assd_mean += m.assd;
    rep.hd_mean += m.hausdorff;
    for (const auto& [t, f] : m.frac_gt) rep.frac_gt_mean[t] += f;
  }
  rep.assd_mean /= n;
  rep.hd_mean /= n;
  for (auto& [t, f] : rep.frac_gt_mean) f /= n;
  for (const auto& m : rep.per_pair) {
    rep.assd_std += (m.assd - rep.assd_mean) * (m.assd - rep.assd_mean);
    rep.hd_std += (m.hausdorff - rep.hd_mean) * (m.hausdorff - rep.hd_mean);
  }
  rep.assd_std = std::sqrt(rep.assd_std / n);
  rep.hd_std = std::sqrt(rep.hd_std / n);
  return rep;
}

}  // namespace cortexgeo
