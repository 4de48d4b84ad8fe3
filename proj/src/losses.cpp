#include "cortexgeo/losses.hpp"

#include "cortexgeo/parallel.hpp"
#include "cortexgeo/spatial.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

namespace cortexgeo {

namespace {

void check_cloud(const SampledCloud& c, const char* role) {
  if (c.size() == 0)
    throw ValidationError(std::string("loss: empty ") + role + " cloud");
}

double block_sum(const std::vector<double>& values) {
  return par::map_reduce(
      static_cast<std::int64_t>(values.size()), 0.0,
      [&](std::int64_t b, std::int64_t e) {
        double s = 0.0;
        for (std::int64_t i = b; i < e; ++i) s += values[i];
        return s;
      },
      [](double a, double b) { return a + b; });
}

}  // namespace

NnPairing nearest_pairing(const SampledCloud& pred, const SampledCloud& gt) {
  check_cloud(pred, "pred");
  check_cloud(gt, "gt");
  const PointIndex pred_index(pred.points);
  const PointIndex gt_index(gt.points);

  NnPairing pairing;
  pairing.gt_to_pred.resize(gt.size());
  pairing.pred_to_gt.resize(pred.size());
  par::parallel_for(gt.size(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      pairing.gt_to_pred[i] = pred_index.nearest(gt.points[i]).index;
  });
  par::parallel_for(pred.size(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      pairing.pred_to_gt[i] = gt_index.nearest(pred.points[i]).index;
  });
  return pairing;
}

namespace {

PointLossGrad chamfer_impl(const SampledCloud& pred, const SampledCloud& gt,
                           const NnPairing& pairing, bool use_kappa,
                           bool with_grad) {
  if (use_kappa && !gt.has_curvature())
    throw ValidationError("chamfer_curvature: gt cloud carries no curvature weights");

  const Index np = pred.size(), ng = gt.size();
  auto kappa = [&](Index gt_idx) {
    return use_kappa ? gt.curvature_weight[gt_idx] : 1.0;
  };

  PointLossGrad out;
  if (with_grad) out.grad_points.assign(np, Vec3::Zero());

  // gt -> pred direction
  std::vector<double> terms(ng);
  par::parallel_for(ng, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t j = b; j < e; ++j) {
      const Index i = pairing.gt_to_pred[j];
      terms[j] = kappa(static_cast<Index>(j)) *
                 (gt.points[j] - pred.points[i]).squaredNorm();
    }
  });
  const double sum_gt = block_sum(terms);
  if (with_grad) {
    for (Index j = 0; j < ng; ++j) {
      const Index i = pairing.gt_to_pred[j];
      out.grad_points[i] +=
          (2.0 * kappa(j) / ng) * (pred.points[i] - gt.points[j]);
    }
  }

  // pred -> gt direction
  terms.assign(np, 0.0);
  par::parallel_for(np, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const Index j = pairing.pred_to_gt[i];
      terms[i] = kappa(j) * (pred.points[i] - gt.points[j]).squaredNorm();
    }
  });
  const double sum_pred = block_sum(terms);
  if (with_grad) {
    par::parallel_for(np, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) {
        const Index j = pairing.pred_to_gt[i];
        out.grad_points[i] +=
            (2.0 * kappa(j) / np) * (pred.points[i] - gt.points[j]);
      }
    });
  }

  out.value = sum_gt / ng + sum_pred / np;
  return out;
}

}  // namespace

PointLossGrad chamfer_curvature(const SampledCloud& pred, const SampledCloud& gt) {
  return chamfer_impl(pred, gt, nearest_pairing(pred, gt), true, true);
}

PointLossGrad chamfer_classic(const SampledCloud& pred, const SampledCloud& gt) {
  return chamfer_impl(pred, gt, nearest_pairing(pred, gt), false, true);
}

namespace {

struct FaceNormalCache {
  std::vector<Vec3> unit;      // zero for degenerate faces
  std::vector<Vec3> raw;       // e1 x e2
  std::vector<double> length;  // |raw|
};

FaceNormalCache face_normal_cache(const Mesh& mesh) {
  FaceNormalCache c;
  const Index nf = mesh.face_count();
  c.unit.resize(nf);
  c.raw.resize(nf);
  c.length.resize(nf);
  for (Index f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3 raw = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                         .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    const double len = raw.norm();
    c.raw[f] = raw;
    c.length[f] = len;
    c.unit[f] = len < 1e-150 ? Vec3::Zero() : Vec3(raw / len);
  }
  return c;
}

// Adds the gradient of coef * (unit normal . g) w.r.t. the face's vertices.
void scatter_normal_gradient(const Mesh& mesh, const FaceNormalCache& cache,
                             Index face, const Vec3& g, double coef,
                             std::vector<Vec3>& grad) {
  const auto& tri = mesh.faces[face];
  const Vec3& n = cache.unit[face];
  const Vec3 w = coef * (g - n * n.dot(g)) / cache.length[face];
  const Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  const Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  const Vec3 g1 = e2.cross(w);
  const Vec3 g2 = w.cross(e1);
  grad[tri[1]] += g1;
  grad[tri[2]] += g2;
  grad[tri[0]] -= g1 + g2;
}

}  // namespace

VertexLossGrad inter_normal_consistency(const SampledCloud& pred,
                                        const SampledCloud& gt,
                                        const Mesh& pred_mesh) {
  check_cloud(pred, "pred");
  check_cloud(gt, "gt");
  if (pred.normals.size() != pred.points.size() ||
      gt.normals.size() != gt.points.size())
    throw ValidationError("inter_normal_consistency: cloud lacks normals");

  const NnPairing pairing = nearest_pairing(pred, gt);
  const FaceNormalCache cache = face_normal_cache(pred_mesh);

  VertexLossGrad out;
  out.grad_vertices.assign(pred_mesh.vertices.size(), Vec3::Zero());

  const Index ng = gt.size(), np = pred.size();
  double sum_gt = 0.0, sum_pred = 0.0;
  // gt side: gt normal vs normal of its matched pred point's face
  {
    std::vector<double> terms(ng, 0.0);
    for (Index j = 0; j < ng; ++j) {
      const Index i = pairing.gt_to_pred[j];
      const Index f = pred.face_id[i];
      if (f < 0 || cache.length[f] < 1e-150) {
        ++out.skipped;
        continue;
      }
      terms[j] = 1.0 - gt.normals[j].dot(cache.unit[f]);
      scatter_normal_gradient(pred_mesh, cache, f, gt.normals[j], -1.0 / ng,
                              out.grad_vertices);
    }
    sum_gt = block_sum(terms);
  }
  // pred side: pred face normal vs matched gt normal
  {
    std::vector<double> terms(np, 0.0);
    for (Index i = 0; i < np; ++i) {
      const Index j = pairing.pred_to_gt[i];
      const Index f = pred.face_id[i];
      if (f < 0 || cache.length[f] < 1e-150) {
        ++out.skipped;
        continue;
      }
      terms[i] = 1.0 - cache.unit[f].dot(gt.normals[j]);
      scatter_normal_gradient(pred_mesh, cache, f, gt.normals[j], -1.0 / np,
                              out.grad_vertices);
    }
    sum_pred = block_sum(terms);
  }
  out.value = sum_gt / ng + sum_pred / np;
  return out;
}

VertexLossGrad intra_normal_consistency(const Mesh& mesh) {
  validate(mesh);
  const FaceNormalCache cache = face_normal_cache(mesh);

  // adjacent face pairs, grouped per undirected edge
  std::vector<std::pair<std::pair<Index, Index>, Index>> edge_face;
  edge_face.reserve(mesh.faces.size() * 3);
  for (Index f = 0; f < mesh.face_count(); ++f) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const Index a = t[k], b = t[(k + 1) % 3];
      edge_face.push_back({{std::min(a, b), std::max(a, b)}, f});
    }
  }
  std::sort(edge_face.begin(), edge_face.end());

  VertexLossGrad out;
  out.grad_vertices.assign(mesh.vertices.size(), Vec3::Zero());
  double value = 0.0;
  std::size_t i = 0;
  while (i < edge_face.size()) {
    std::size_t j = i + 1;
    while (j < edge_face.size() && edge_face[j].first == edge_face[i].first) ++j;
    for (std::size_t p = i; p < j; ++p) {
      for (std::size_t q = p + 1; q < j; ++q) {
        const Index f1 = edge_face[p].second, f2 = edge_face[q].second;
        if (cache.length[f1] < 1e-150 || cache.length[f2] < 1e-150) {
          ++out.skipped;
          continue;
        }
        value += 1.0 - cache.unit[f1].dot(cache.unit[f2]);
        scatter_normal_gradient(mesh, cache, f1, cache.unit[f2], -1.0,
                                out.grad_vertices);
        scatter_normal_gradient(mesh, cache, f2, cache.unit[f1], -1.0,
                                out.grad_vertices);
      }
    }
    i = j;
  }
  out.value = value;
  return out;
}

FieldLossGrad laplacian_displacement(const AdjacencyInfo& adj,
                                     const std::vector<Vec3>& displacement) {
  if (displacement.size() != adj.neighbors.size())
    throw ValidationError("laplacian_displacement: field length mismatch");
  const Index nv = static_cast<Index>(displacement.size());
  if (nv == 0) throw ValidationError("laplacian_displacement: empty field");

  const std::vector<Vec3> residual = uniform_laplacian_apply(adj, displacement);

  FieldLossGrad out;
  out.grad_field.assign(nv, Vec3::Zero());
  std::vector<double> norms(nv);
  for (Index i = 0; i < nv; ++i) norms[i] = residual[i].norm();
  out.value = block_sum(norms) / nv;

  for (Index i = 0; i < nv; ++i) {
    if (norms[i] <= 0.0) continue;  // subgradient 0 at the kink
    const Vec3 unit = residual[i] / (norms[i] * nv);
    out.grad_field[i] -= unit;
    const auto& nb = adj.neighbors[i];
    const double inv_deg = 1.0 / static_cast<double>(nb.size());
    for (Index j : nb) out.grad_field[j] += inv_deg * unit;
  }
  return out;
}

FieldLossGrad laplacian_absolute(const AdjacencyInfo& adj,
                                 const std::vector<Vec3>& vertices) {
  return laplacian_displacement(adj, vertices);
}

VertexLossGrad edge_loss(const AdjacencyInfo& adj,
                         const std::vector<Vec3>& vertices) {
  if (vertices.size() != adj.neighbors.size())
    throw ValidationError("edge_loss: vertex count mismatch");
  if (adj.edges.empty()) throw ValidationError("edge_loss: mesh has no edges");

  const double ne = static_cast<double>(adj.edges.size());
  std::vector<double> terms(adj.edges.size());
  par::parallel_for(static_cast<std::int64_t>(adj.edges.size()),
                    [&](std::int64_t b, std::int64_t e) {
                      for (std::int64_t k = b; k < e; ++k) {
                        const auto& [i, j] = adj.edges[k];
                        terms[k] = (vertices[i] - vertices[j]).squaredNorm();
                      }
                    });
  VertexLossGrad out;
  out.value = block_sum(terms) / ne;
  out.grad_vertices.assign(vertices.size(), Vec3::Zero());
  for (const auto& [i, j] : adj.edges) {
    const Vec3 g = (2.0 / ne) * (vertices[i] - vertices[j]);
    out.grad_vertices[i] += g;
    out.grad_vertices[j] -= g;
  }
  return out;
}

VertexLossGrad edge_loss(const Mesh& mesh) {
  return edge_loss(build_adjacency(mesh), mesh.vertices);
}

std::vector<Vec3> scatter_point_gradient(const SampledCloud& cloud,
                                         const std::vector<Vec3>& grad_points,
                                         const Mesh& mesh) {
  if (grad_points.size() != cloud.points.size())
    throw ValidationError("scatter_point_gradient: size mismatch");
  std::vector<Vec3> grad(mesh.vertices.size(), Vec3::Zero());
  for (Index p = 0; p < cloud.size(); ++p) {
    const Index f = cloud.face_id[p];
    if (f < 0) continue;
    const auto& tri = mesh.faces[f];
    for (int k = 0; k < 3; ++k)
      grad[tri[k]] += cloud.barycentric[p][k] * grad_points[p];
  }
  return grad;
}

// ------------------------------------------------------------- composition

const ClassWeights& LossWeights::at(const std::string& name) const {
  const auto it = classes.find(name);
  if (it == classes.end())
    throw ValidationError("loss weights: missing class '" + name + "'");
  return it->second;
}

namespace {

using nlohmann::json;

ClassWeights parse_class(const json& j) {
  static const char* keys[] = {"chamfer", "inter_nc", "laplacian", "intra_nc",
                               "edge"};
  ClassWeights w;
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) {
          return key == k;
        }) == std::end(keys))
      throw ValidationError("loss weights: unknown key '" + key + "'");
    if (!value.is_number())
      throw ValidationError("loss weights: '" + key + "' is not a number");
    const double v = value.get<double>();
    if (v < 0.0) throw ValidationError("loss weights: '" + key + "' is negative");
    if (key == "chamfer") w.chamfer = v;
    else if (key == "inter_nc") w.inter_nc = v;
    else if (key == "laplacian") w.laplacian = v;
    else if (key == "intra_nc") w.intra_nc = v;
    else w.edge = v;
  }
  return w;
}

}  // namespace

LossWeights parse_weights_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("loss weights: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("classes") || !j["classes"].is_object())
    throw ValidationError("loss weights: expected {\"classes\": {...}}");
  LossWeights weights;
  for (const auto& [name, cls] : j["classes"].items()) {
    if (!cls.is_object())
      throw ValidationError("loss weights: class '" + name + "' is not an object");
    weights.classes.emplace(name, parse_class(cls));
  }
  if (weights.classes.empty())
    throw ValidationError("loss weights: no classes defined");
  return weights;
}

LossWeights load_weights_json(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_weights_json(ss.str());
}

std::string weights_to_json(const LossWeights& weights) {
  json classes = json::object();
  for (const auto& [name, w] : weights.classes) {
    classes[name] = {{"chamfer", w.chamfer},
                     {"inter_nc", w.inter_nc},
                     {"laplacian", w.laplacian},
                     {"intra_nc", w.intra_nc},
                     {"edge", w.edge}};
  }
  return json{{"classes", classes}}.dump(2);
}

TotalLossResult total_mesh_loss(std::span<const StageClassTerm> terms,
                                const LossWeights& weights, ChamferMode mode,
                                bool with_gradients) {
  TotalLossResult result;
  result.grad_vertices.resize(terms.size());

  for (std::size_t t = 0; t < terms.size(); ++t) {
    const StageClassTerm& term = terms[t];
    if (!term.mesh || !term.adjacency || !term.displacement || !term.pred_cloud ||
        !term.gt_cloud)
      throw ValidationError("total_mesh_loss: incomplete term");
    const ClassWeights& w = weights.at(term.class_name);
    const Index nv = term.mesh->vertex_count();

    LossBreakdownRow row;
    row.stage = term.stage;
    row.class_name = term.class_name;

    std::vector<Vec3> grad(with_gradients ? nv : 0, Vec3::Zero());

    if (w.chamfer > 0.0 || w.inter_nc > 0.0) {
      const NnPairing pairing = nearest_pairing(*term.pred_cloud, *term.gt_cloud);
      if (w.chamfer > 0.0) {
        const PointLossGrad ch =
            chamfer_impl(*term.pred_cloud, *term.gt_cloud, pairing,
                         mode == ChamferMode::curvature, with_gradients);
        row.chamfer = ch.value;
        if (with_gradients) {
          const auto& cloud = *term.pred_cloud;
          for (Index p = 0; p < cloud.size(); ++p) {
            const Index f = cloud.face_id[p];
            if (f < 0) continue;
            const auto& tri = term.mesh->faces[f];
            const Vec3 g = w.chamfer * ch.grad_points[p];
            for (int k = 0; k < 3; ++k)
              grad[tri[k]] += cloud.barycentric[p][k] * g;
          }
        }
      }
      if (w.inter_nc > 0.0) {
        const VertexLossGrad nc = inter_normal_consistency(
            *term.pred_cloud, *term.gt_cloud, *term.mesh);
        row.inter_nc = nc.value;
        if (with_gradients)
          for (Index v = 0; v < nv; ++v) grad[v] += w.inter_nc * nc.grad_vertices[v];
      }
    }
    if (w.laplacian > 0.0) {
      const FieldLossGrad lap = laplacian_displacement(*term.adjacency,
                                                       *term.displacement);
      row.laplacian = lap.value;
      if (with_gradients)
        for (Index v = 0; v < nv; ++v) grad[v] += w.laplacian * lap.grad_field[v];
    }
    if (w.intra_nc > 0.0) {
      const VertexLossGrad nc = intra_normal_consistency(*term.mesh);
      row.intra_nc = nc.value;
      if (with_gradients)
        for (Index v = 0; v < nv; ++v) grad[v] += w.intra_nc * nc.grad_vertices[v];
    }
    if (w.edge > 0.0) {
      const VertexLossGrad el = edge_loss(*term.adjacency, term.mesh->vertices);
      row.edge = el.value;
      if (with_gradients)
        for (Index v = 0; v < nv; ++v) grad[v] += w.edge * el.grad_vertices[v];
    }

    row.weighted_total = w.chamfer * row.chamfer + w.inter_nc * row.inter_nc +
                         w.laplacian * row.laplacian + w.intra_nc * row.intra_nc +
                         w.edge * row.edge;
    result.breakdown.grand_total += row.weighted_total;
    result.breakdown.rows.push_back(std::move(row));
    result.grad_vertices[t] = std::move(grad);
  }
  return result;
}

}  // namespace cortexgeo
