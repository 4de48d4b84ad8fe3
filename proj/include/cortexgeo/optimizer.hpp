#pragma once

#include "cortexgeo/losses.hpp"
#include "cortexgeo/mesh.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cortexgeo {

enum class StepRule { adaptive, fixed };
enum class ResamplePolicy { per_stage, per_iteration };

struct DeformConfig {
  int stages = 4;
  int iterations = 250;
  StepRule step_rule = StepRule::adaptive;
  double step_rate = 2e-3;
  // per_stage keeps the sampled prediction cloud fixed within a stage, which
  // makes the stage objective deterministic and the accepted loss trace
  // non-increasing; per_iteration redraws it every step.
  ResamplePolicy resample_policy = ResamplePolicy::per_stage;
  double convergence_tol = 1e-8;  // relative change of the grand total
  double kappa_max = 5.0;
  ChamferMode chamfer_mode = ChamferMode::curvature;
  int max_halvings = 20;
  LossWeights weights;
};

DeformConfig parse_deform_config_json(const std::string& text);
std::string deform_config_to_json(const DeformConfig& config);

struct TraceRow {
  int stage = 0;
  int iteration = 0;
  // weighted sums over classes, so total = chamfer + inter_nc + ... + edge
  double chamfer = 0.0;
  double inter_nc = 0.0;
  double laplacian = 0.0;
  double intra_nc = 0.0;
  double edge = 0.0;
  double total = 0.0;
  double step_rate = 0.0;
  bool accepted = true;
};

struct FitResult {
  std::vector<std::string> class_names;
  // per class: meshes after stages 1..S (face lists identical to template)
  std::map<std::string, std::vector<Mesh>> stage_meshes;
  std::vector<TraceRow> trace;
  std::map<std::string, TopologyReport> final_topology;

  const Mesh& final_mesh(const std::string& cls) const {
    return stage_meshes.at(cls).back();
  }
};

// Deforms each class template onto its target by direct gradient descent on
// per-stage displacement fields through the total mesh loss. Connectivity is
// never touched, so topology is preserved by construction. A step that
// increases the loss is rejected and the rate halved (up to max_halvings).
// Deterministic for fixed (inputs, config, seed).
FitResult fit(const std::map<std::string, Mesh>& templates,
              const std::map<std::string, Mesh>& targets,
              const DeformConfig& config, std::uint64_t seed);

// vertices' = vertices + displacement; faces unchanged.
Mesh apply_displacement(const Mesh& mesh, const std::vector<Vec3>& displacement);

// One explicit fixed-rate descent step, x' = x - rate * grad.
std::vector<Vec3> gradient_step_fixed(const std::vector<Vec3>& x,
                                      const std::vector<Vec3>& grad, double rate);

}  // namespace cortexgeo
