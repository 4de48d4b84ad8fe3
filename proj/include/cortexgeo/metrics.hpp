#pragma once

#include "cortexgeo/mesh.hpp"
#include "cortexgeo/spatial.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

namespace cortexgeo {

struct MetricsReport {
  double assd = 0.0;
  double hausdorff = 0.0;
  double hausdorff_percentile = 100.0;
  std::map<double, double> frac_gt;  // threshold -> fraction of distances above
  Index sample_count = 0;
  std::uint64_t seed = 0;
};

// Point samples on each mesh, exact distances to the other surface.
// Both meshes are sampled with the same seed, so the result is symmetric in
// its mesh arguments.
MetricsReport surface_metrics(const Mesh& a, const Mesh& b, Index n_samples,
                              std::uint64_t seed, double percentile = 100.0,
                              const std::vector<double>& thresholds = {});

// Average symmetric surface distance: mean of the two directed means.
double assd(const Mesh& a, const Mesh& b, Index n_samples, std::uint64_t seed);

// Symmetric max (percentile 100) or percentile of pooled sample distances.
double hausdorff(const Mesh& a, const Mesh& b, Index n_samples, std::uint64_t seed,
                 double percentile = 100.0);

std::vector<double> exceedance_fractions(const Mesh& a, const Mesh& b,
                                         Index n_samples, std::uint64_t seed,
                                         const std::vector<double>& thresholds);

// Mean distance from a fixed set of probe points to a surface (directed).
double mean_distance_to_surface(const std::vector<Vec3>& probes,
                                const SurfaceIndex& surface);

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Mesh apply(const Mesh& mesh) const;
};

struct IcpResult {
  RigidTransform transform;
  int iterations = 0;
  double mean_squared_error = 0.0;
  std::vector<double> mse_history;  // one entry per iteration
  bool converged = false;
};

// Iterative closest point: alternate exact closest-point correspondences and
// the SVD (Kabsch) rigid solve until the MSE relative change drops below tol.
IcpResult icp_rigid(const std::vector<Vec3>& source, const SurfaceIndex& target,
                    int max_iters = 64, double tol = 1e-10);

struct ThicknessMap {
  std::vector<double> values;  // one per white-matter vertex
  double median = 0.0;
  double lower_quartile = 0.0;
  double upper_quartile = 0.0;
};

// Per white-vertex exact distance to the closest point on the pial surface.
ThicknessMap cortical_thickness(const Mesh& white, const Mesh& pial);

struct ConsistencyReport {
  std::vector<MetricsReport> per_pair;
  double assd_mean = 0.0, assd_std = 0.0;
  double hd_mean = 0.0, hd_std = 0.0;
  std::map<double, double> frac_gt_mean;
};

// Per pair: ICP-align the second mesh onto the first, then surface metrics.
ConsistencyReport consistency_report(
    const std::vector<std::pair<Mesh, Mesh>>& mesh_pairs, Index n_samples,
    std::uint64_t seed, const std::vector<double>& thresholds = {});

}  // namespace cortexgeo
