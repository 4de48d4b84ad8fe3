#include "cortexgeo/optimizer.hpp"

#include "cortexgeo/curvature.hpp"
#include "cortexgeo/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cortexgeo {

namespace {

using nlohmann::json;

constexpr double kEmaBeta = 0.9;
constexpr double kEmaEps = 1e-8;
constexpr double kRateRecovery = 1.2;

struct ClassState {
  std::string name;
  Mesh prev;                  // stage-start mesh
  Mesh current;               // prev + displacement
  AdjacencyInfo adjacency;    // template connectivity, never changes
  SampledCloud gt_cloud;      // fixed, carries kappa
  SampledCloud pred_cloud;    // provenance fixed per stage (or iteration)
  std::vector<Vec3> displacement;
  std::vector<Vec3> ema;      // adaptive second-moment accumulator
};

TraceRow make_row(int stage, int iteration, const LossBreakdown& breakdown,
                  const LossWeights& weights, double rate, bool accepted) {
  TraceRow row;
  row.stage = stage;
  row.iteration = iteration;
  for (const auto& r : breakdown.rows) {
    const ClassWeights& w = weights.at(r.class_name);
    row.chamfer += w.chamfer * r.chamfer;
    row.inter_nc += w.inter_nc * r.inter_nc;
    row.laplacian += w.laplacian * r.laplacian;
    row.intra_nc += w.intra_nc * r.intra_nc;
    row.edge += w.edge * r.edge;
  }
  row.total = breakdown.grand_total;
  row.step_rate = rate;
  row.accepted = accepted;
  return row;
}

bool all_finite(const std::vector<Vec3>& field) {
  for (const Vec3& v : field)
    if (!v.allFinite()) return false;
  return true;
}

}  // namespace

Mesh apply_displacement(const Mesh& mesh, const std::vector<Vec3>& displacement) {
  if (displacement.size() != mesh.vertices.size())
    throw ValidationError("apply_displacement: length mismatch");
  Mesh out = mesh;
  for (std::size_t i = 0; i < displacement.size(); ++i)
    out.vertices[i] += displacement[i];
  return out;
}

std::vector<Vec3> gradient_step_fixed(const std::vector<Vec3>& x,
                                      const std::vector<Vec3>& grad, double rate) {
  if (grad.size() != x.size())
    throw ValidationError("gradient_step_fixed: length mismatch");
  std::vector<Vec3> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - rate * grad[i];
  return out;
}

FitResult fit(const std::map<std::string, Mesh>& templates,
              const std::map<std::string, Mesh>& targets,
              const DeformConfig& config, std::uint64_t seed) {
  if (config.stages < 1 || config.iterations < 1)
    throw ValidationError("fit: stages and iterations must be >= 1");
  if (!(config.step_rate > 0.0)) throw ValidationError("fit: step rate must be > 0");
  if (templates.empty()) throw ValidationError("fit: no template classes");

  for (const auto& [name, tmpl] : templates) {
    if (!targets.count(name))
      throw ValidationError("fit: target missing for class '" + name + "'");
    config.weights.at(name);  // throws on missing weight class
    validate(tmpl);
    if (!is_edge_manifold(tmpl))
      throw ValidationError("fit: template for class '" + name +
                            "' has non-manifold edges");
  }
  if (targets.size() != templates.size())
    throw ValidationError("fit: class sets of templates and targets differ");

  // ground-truth clouds at vertex resolution with curvature weights,
  // leveled to the smallest target's vertex count
  Index n_points = std::numeric_limits<Index>::max();
  for (const auto& [name, target] : targets)
    n_points = std::min(n_points, target.vertex_count());
  if (n_points < 1) throw ValidationError("fit: empty target mesh");

  std::vector<ClassState> states;
  std::size_t class_idx = 0;
  for (const auto& [name, tmpl] : templates) {
    const Mesh& target = targets.at(name);
    ClassState st;
    st.name = name;
    st.prev = tmpl;
    st.adjacency = build_adjacency(tmpl);
    const CurvatureField curv = mean_curvature(target);
    const std::vector<double> kappa = curvature_weight(curv, config.kappa_max);
    st.gt_cloud = resample_as_vertices(target, &kappa);
    if (st.gt_cloud.size() > n_points)
      st.gt_cloud = subsample_cloud(st.gt_cloud, n_points,
                                    hash_seed(seed, 0x6774ULL, class_idx));
    states.push_back(std::move(st));
    ++class_idx;
  }

  FitResult result;
  for (const auto& st : states) result.class_names.push_back(st.name);

  auto evaluate = [&](bool with_grads) {
    std::vector<StageClassTerm> terms;
    terms.reserve(states.size());
    for (auto& st : states) {
      StageClassTerm t;
      t.stage = 0;  // filled by caller's row
      t.class_name = st.name;
      t.mesh = &st.current;
      t.adjacency = &st.adjacency;
      t.displacement = &st.displacement;
      t.pred_cloud = &st.pred_cloud;
      t.gt_cloud = &st.gt_cloud;
      terms.push_back(t);
    }
    return total_mesh_loss(terms, config.weights, config.chamfer_mode, with_grads);
  };

  for (int stage = 1; stage <= config.stages; ++stage) {
    double rate = config.step_rate;
    for (std::size_t c = 0; c < states.size(); ++c) {
      auto& st = states[c];
      st.displacement.assign(st.prev.vertices.size(), Vec3::Zero());
      st.ema.assign(st.prev.vertices.size(), Vec3::Zero());
      st.current = st.prev;
      st.pred_cloud = sample_surface(
          st.prev, n_points, hash_seed(seed, static_cast<std::uint64_t>(stage), c));
    }

    TotalLossResult cur = evaluate(true);
    if (!std::isfinite(cur.breakdown.grand_total))
      throw NumericError("fit: non-finite loss at stage " + std::to_string(stage) +
                         " iteration 0");
    result.trace.push_back(
        make_row(stage, 0, cur.breakdown, config.weights, rate, true));

    int ema_updates = 0;
    for (int it = 1; it <= config.iterations; ++it) {
      if (config.resample_policy == ResamplePolicy::per_iteration) {
        for (std::size_t c = 0; c < states.size(); ++c)
          states[c].pred_cloud = sample_surface(
              states[c].current, n_points,
              hash_seed(seed, static_cast<std::uint64_t>(stage),
                        hash_seed(static_cast<std::uint64_t>(it), c)));
        cur = evaluate(true);
      }

      for (const auto& g : cur.grad_vertices)
        if (!all_finite(g))
          throw NumericError("fit: non-finite gradient at stage " +
                             std::to_string(stage) + " iteration " +
                             std::to_string(it));

      // per-coordinate adaptive denominators (bias-corrected RMS of grads)
      ++ema_updates;
      const double correction = 1.0 - std::pow(kEmaBeta, ema_updates);
      if (config.step_rule == StepRule::adaptive) {
        for (std::size_t c = 0; c < states.size(); ++c) {
          auto& ema = states[c].ema;
          const auto& g = cur.grad_vertices[c];
          for (std::size_t v = 0; v < ema.size(); ++v)
            ema[v] = kEmaBeta * ema[v] +
                     (1.0 - kEmaBeta) * g[v].cwiseProduct(g[v]);
        }
      }

      bool accepted = false;
      TotalLossResult trial_eval;
      std::vector<std::vector<Vec3>> base_disp(states.size());
      for (std::size_t c = 0; c < states.size(); ++c)
        base_disp[c] = states[c].displacement;

      for (int halving = 0; halving <= config.max_halvings; ++halving) {
        for (std::size_t c = 0; c < states.size(); ++c) {
          auto& st = states[c];
          const auto& g = cur.grad_vertices[c];
          for (std::size_t v = 0; v < st.displacement.size(); ++v) {
            Vec3 delta;
            if (config.step_rule == StepRule::adaptive) {
              const Vec3 denom =
                  (st.ema[v] / correction).cwiseSqrt().array() + kEmaEps;
              delta = rate * g[v].cwiseQuotient(denom);
            } else {
              delta = rate * g[v];
            }
            st.displacement[v] = base_disp[c][v] - delta;
          }
          st.current = apply_displacement(st.prev, st.displacement);
          update_cloud_geometry(st.pred_cloud, st.current);
        }
        trial_eval = evaluate(false);
        if (std::isfinite(trial_eval.breakdown.grand_total) &&
            trial_eval.breakdown.grand_total <= cur.breakdown.grand_total) {
          accepted = true;
          break;
        }
        rate *= 0.5;
      }

      const double prev_total = cur.breakdown.grand_total;
      if (accepted) {
        result.trace.push_back(
            make_row(stage, it, trial_eval.breakdown, config.weights, rate, true));
        rate = std::min(rate * kRateRecovery, config.step_rate);
        cur = evaluate(true);  // gradients at the accepted point
      } else {
        // roll back to the unchanged displacement
        for (std::size_t c = 0; c < states.size(); ++c) {
          auto& st = states[c];
          st.displacement = std::move(base_disp[c]);
          st.current = apply_displacement(st.prev, st.displacement);
          update_cloud_geometry(st.pred_cloud, st.current);
        }
        result.trace.push_back(
            make_row(stage, it, cur.breakdown, config.weights, rate, false));
      }

      const double new_total = result.trace.back().total;
      if (std::abs(prev_total - new_total) <=
          config.convergence_tol * std::max(1.0, std::abs(prev_total)))
        break;
    }

    for (auto& st : states) {
      st.prev = apply_displacement(st.prev, st.displacement);
      st.current = st.prev;
      result.stage_meshes[st.name].push_back(st.prev);
    }
  }

  for (const auto& st : states)
    result.final_topology.emplace(st.name, topology_report(st.prev));
  return result;
}

// ------------------------------------------------------------- config JSON

namespace {

StepRule parse_step_rule(const std::string& s) {
  if (s == "adaptive") return StepRule::adaptive;
  if (s == "fixed") return StepRule::fixed;
  throw ValidationError("deform config: unknown step_rule '" + s + "'");
}

ResamplePolicy parse_resample(const std::string& s) {
  if (s == "per_stage") return ResamplePolicy::per_stage;
  if (s == "per_iteration") return ResamplePolicy::per_iteration;
  throw ValidationError("deform config: unknown resample_policy '" + s + "'");
}

ChamferMode parse_chamfer_mode(const std::string& s) {
  if (s == "curvature") return ChamferMode::curvature;
  if (s == "classic") return ChamferMode::classic;
  throw ValidationError("deform config: unknown chamfer mode '" + s + "'");
}

}  // namespace

DeformConfig parse_deform_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("deform config: invalid JSON: ") + e.what());
  }
  DeformConfig c;
  if (j.contains("stages")) c.stages = j["stages"].get<int>();
  if (j.contains("iterations")) c.iterations = j["iterations"].get<int>();
  if (j.contains("step_rule"))
    c.step_rule = parse_step_rule(j["step_rule"].get<std::string>());
  if (j.contains("step_rate")) c.step_rate = j["step_rate"].get<double>();
  if (j.contains("resample_policy"))
    c.resample_policy = parse_resample(j["resample_policy"].get<std::string>());
  if (j.contains("convergence_tol"))
    c.convergence_tol = j["convergence_tol"].get<double>();
  if (j.contains("kappa_max")) c.kappa_max = j["kappa_max"].get<double>();
  if (j.contains("chamfer"))
    c.chamfer_mode = parse_chamfer_mode(j["chamfer"].get<std::string>());
  if (j.contains("max_halvings")) c.max_halvings = j["max_halvings"].get<int>();
  if (j.contains("weights"))
    c.weights = parse_weights_json(j["weights"].dump());
  if (c.stages < 1 || c.iterations < 1 || !(c.step_rate > 0.0))
    throw ValidationError("deform config: stages, iterations, rate must be positive");
  return c;
}

std::string deform_config_to_json(const DeformConfig& c) {
  json j{
      {"stages", c.stages},
      {"iterations", c.iterations},
      {"step_rule", c.step_rule == StepRule::adaptive ? "adaptive" : "fixed"},
      {"step_rate", c.step_rate},
      {"resample_policy", c.resample_policy == ResamplePolicy::per_stage
                              ? "per_stage"
                              : "per_iteration"},
      {"convergence_tol", c.convergence_tol},
      {"kappa_max", c.kappa_max},
      {"chamfer",
       c.chamfer_mode == ChamferMode::curvature ? "curvature" : "classic"},
      {"max_halvings", c.max_halvings},
      {"weights", json::parse(weights_to_json(c.weights))},
  };
  return j.dump(2);
}

}  // namespace cortexgeo
