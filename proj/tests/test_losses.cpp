#include "cortexgeo/losses.hpp"
#include "cortexgeo/optimizer.hpp"
#include "cortexgeo/template_mesh.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace cortexgeo;

namespace {

SampledCloud cloud_on_mesh(const Mesh& mesh, Index n, std::uint64_t seed) {
  return sample_surface(mesh, n, seed);
}

Mesh rotated_translated(const Mesh& mesh) {
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(1.1, Vec3(0.3, -1, 0.5).normalized()).toRotationMatrix();
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = rot * v + Vec3(0.4, 2.0, -1.0);
  return out;
}

SampledCloud transformed_cloud(const SampledCloud& cloud,
                               const Eigen::Matrix3d& rot, const Vec3& t) {
  SampledCloud out = cloud;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i] = rot * out.points[i] + t;
    out.normals[i] = rot * out.normals[i];
  }
  return out;
}

}  // namespace

TEST_CASE("chamfer on coincident clouds is zero") {
  const auto pts = fixtures::random_points(80, 2);
  SampledCloud a = fixtures::make_cloud(pts, 3, true);
  const PointLossGrad r = chamfer_curvature(a, a);
  CHECK(r.value == 0.0);
  for (const Vec3& g : r.grad_points) CHECK(g.norm() == 0.0);
}

TEST_CASE("chamfer singleton pair reproduces the closed form") {
  SampledCloud gt = fixtures::make_cloud({Vec3(0, 0, 0)}, 1);
  gt.curvature_weight = {2.0};
  const Vec3 u(0.3, 0.4, 0.0);  // |u| = 0.5
  const SampledCloud pred = fixtures::make_cloud({u}, 2);

  const PointLossGrad r = chamfer_curvature(pred, gt);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15));  // 2 * kappa * d^2
  // gradient 4 kappa (u - a), exactly
  CHECK(r.grad_points[0] == Vec3(4.0 * 2.0 * u));
}

TEST_CASE("classic chamfer closed form and equivalence to kappa = 1") {
  const double d = 0.37;
  const SampledCloud gt = fixtures::make_cloud({Vec3(0, 0, 0)}, 4);
  const SampledCloud pred = fixtures::make_cloud({Vec3(d, 0, 0)}, 5);
  CHECK(chamfer_classic(pred, gt).value == doctest::Approx(2 * d * d).epsilon(1e-15));

  const auto pts_a = fixtures::random_points(60, 6);
  const auto pts_b = fixtures::random_points(45, 7);
  SampledCloud cloud_gt = fixtures::make_cloud(pts_b, 8);
  cloud_gt.curvature_weight.assign(pts_b.size(), 1.0);
  const SampledCloud cloud_pred = fixtures::make_cloud(pts_a, 9);
  const PointLossGrad curv = chamfer_curvature(cloud_pred, cloud_gt);
  const PointLossGrad classic = chamfer_classic(cloud_pred, cloud_gt);
  CHECK(curv.value == doctest::Approx(classic.value).epsilon(1e-15));
  for (std::size_t i = 0; i < curv.grad_points.size(); ++i)
    CHECK((curv.grad_points[i] - classic.grad_points[i]).norm() < 1e-15);
}

TEST_CASE("chamfer matches the brute-force oracle on random clouds") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto pts_pred = fixtures::random_points(50, seed);
    const auto pts_gt = fixtures::random_points(50, seed + 100);
    SampledCloud gt = fixtures::make_cloud(pts_gt, seed + 200, true);
    const SampledCloud pred = fixtures::make_cloud(pts_pred, seed + 300);

    std::vector<Vec3> oracle_grad;
    const double oracle = oracles::brute_chamfer(pts_pred, pts_gt,
                                                 &gt.curvature_weight, &oracle_grad);
    const PointLossGrad r = chamfer_curvature(pred, gt);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-12));
    for (std::size_t i = 0; i < oracle_grad.size(); ++i)
      CHECK((r.grad_points[i] - oracle_grad[i]).norm() < 1e-12);

    // kappa >= 1 makes the weighted loss dominate the classic one
    CHECK(r.value >= chamfer_classic(pred, gt).value);
  }
}

TEST_CASE("chamfer gradients match finite differences") {
  // pick a seed whose nearest-neighbor margins dwarf the FD step, so the
  // locally-constant assignments assumed by the analytic gradient hold
  // throughout the stencil
  std::uint64_t seed = 31;
  std::vector<Vec3> pts_gt, pts_pred;
  for (;; ++seed) {
    pts_gt = fixtures::random_points(120, seed, 0, 4);
    pts_pred = fixtures::random_points(100, seed + 1000, 0, 4);
    if (oracles::min_nn_margin(pts_pred, pts_gt) > 5e-3) break;
  }
  SampledCloud gt = fixtures::make_cloud(pts_gt, 32, true);
  const SampledCloud pred = fixtures::make_cloud(pts_pred, 34);

  const PointLossGrad analytic = chamfer_curvature(pred, gt);
  const auto fd = oracles::finite_difference(
      oracles::flatten(pred.points), [&](const std::vector<double>& flat) {
        SampledCloud moved = pred;
        moved.points = oracles::unflatten(flat);
        return chamfer_curvature(moved, gt).value;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_points), fd) <
        1e-4);
}

TEST_CASE("chamfer error paths") {
  const SampledCloud pred = fixtures::make_cloud(fixtures::random_points(5, 1), 2);
  SampledCloud no_kappa = fixtures::make_cloud(fixtures::random_points(5, 3), 4);
  CHECK_THROWS_AS(chamfer_curvature(pred, no_kappa), ValidationError);
  SampledCloud empty;
  CHECK_THROWS_AS(chamfer_classic(pred, empty), ValidationError);
}

TEST_CASE("inter-mesh normal consistency values") {
  // identical clouds with identical normals: zero
  const Mesh mesh = fixtures::bumpy_sphere(2);
  const SampledCloud cloud = cloud_on_mesh(mesh, 400, 3);
  const VertexLossGrad same = inter_normal_consistency(cloud, cloud, mesh);
  CHECK(same.value < 1e-15);

  // antiparallel normals in all four correspondence terms: value 4
  SampledCloud gt = cloud;
  for (Vec3& n : gt.normals) n = -n;
  const VertexLossGrad anti = inter_normal_consistency(cloud, gt, mesh);
  CHECK(anti.value == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("inter-mesh normal consistency matches a brute-force oracle") {
  const Mesh mesh = fixtures::bumpy_sphere(2);
  const SampledCloud pred = cloud_on_mesh(mesh, 150, 5);
  const SampledCloud gt =
      fixtures::make_cloud(fixtures::random_points(130, 6, -1.2, 1.2), 7);

  double oracle = 0.0;
  for (std::size_t j = 0; j < gt.points.size(); ++j) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pred.points.size(); ++i) {
      const double d2 = (gt.points[j] - pred.points[i]).squaredNorm();
      if (d2 < best) { best = d2; arg = i; }
    }
    oracle += (1.0 - gt.normals[j].dot(pred.normals[arg])) / gt.points.size();
  }
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < gt.points.size(); ++j) {
      const double d2 = (pred.points[i] - gt.points[j]).squaredNorm();
      if (d2 < best) { best = d2; arg = j; }
    }
    oracle += (1.0 - pred.normals[i].dot(gt.normals[arg])) / pred.points.size();
  }
  CHECK(inter_normal_consistency(pred, gt, mesh).value ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("inter-mesh normal consistency gradient matches finite differences") {
  const Mesh mesh = fixtures::jittered(make_icosphere(1), 0.03, 8);  // 42 vertices
  const SampledCloud pred = cloud_on_mesh(mesh, 80, 9);
  const SampledCloud gt =
      fixtures::make_cloud(fixtures::random_points(70, 10, -1.1, 1.1), 11);

  const VertexLossGrad analytic = inter_normal_consistency(pred, gt, mesh);
  const auto fd = oracles::finite_difference(
      oracles::flatten(mesh.vertices), [&](const std::vector<double>& flat) {
        Mesh moved = mesh;
        moved.vertices = oracles::unflatten(flat);
        SampledCloud cloud = pred;
        update_cloud_geometry(cloud, moved);
        return inter_normal_consistency(cloud, gt, moved).value;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_vertices), fd) <
        1e-4);
}

TEST_CASE("intra-mesh normal consistency values") {
  CHECK(intra_normal_consistency(fixtures::plane_grid(5)).value < 1e-12);

  // two faces folded at 90 degrees: 1 - cos(90) = 1
  Mesh fold;
  fold.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  fold.faces = {{0, 1, 2}, {0, 3, 1}};
  CHECK(intra_normal_consistency(fold).value == doctest::Approx(1.0).epsilon(1e-12));

  // refinement smooths the per-pair average on a sphere
  double prev = std::numeric_limits<double>::infinity();
  for (int level : {1, 2, 3}) {
    const Mesh sphere = make_icosphere(level);
    const VertexLossGrad nc = intra_normal_consistency(sphere);
    const double pairs = 1.5 * sphere.face_count();  // 3 edges * 2 faces / 2
    const double per_pair = nc.value / pairs;
    CHECK(per_pair < prev);
    prev = per_pair;
  }
}

TEST_CASE("intra-mesh normal consistency gradient matches finite differences") {
  const Mesh mesh = fixtures::jittered(make_icosphere(1), 0.05, 12);
  const VertexLossGrad analytic = intra_normal_consistency(mesh);
  const auto fd = oracles::finite_difference(
      oracles::flatten(mesh.vertices), [&](const std::vector<double>& flat) {
        Mesh moved = mesh;
        moved.vertices = oracles::unflatten(flat);
        return intra_normal_consistency(moved).value;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_vertices), fd) <
        1e-4);
}

TEST_CASE("laplacian displacement loss") {
  const Mesh mesh = fixtures::icosahedron();
  const AdjacencyInfo adj = build_adjacency(mesh);

  // constant displacement (rigid translation) is free
  const std::vector<Vec3> constant(mesh.vertices.size(), Vec3(0.3, -1, 2));
  const FieldLossGrad c = laplacian_displacement(adj, constant);
  CHECK(c.value < 1e-12);

  // zero field: zero value, zero gradient
  const std::vector<Vec3> zero(mesh.vertices.size(), Vec3::Zero());
  const FieldLossGrad z = laplacian_displacement(adj, zero);
  CHECK(z.value == 0.0);
  for (const Vec3& g : z.grad_field) CHECK(g.norm() == 0.0);

  // dense-matrix oracle on vertex positions
  const FieldLossGrad pos = laplacian_displacement(adj, mesh.vertices);
  CHECK(pos.value ==
        doctest::Approx(oracles::dense_laplacian_loss(adj, mesh.vertices))
            .epsilon(1e-12));

  CHECK_THROWS_AS(laplacian_displacement(adj, std::vector<Vec3>(5)),
                  ValidationError);
}

TEST_CASE("laplacian absolute equals displacement applied to coordinates") {
  const Mesh mesh = fixtures::jittered(make_icosphere(2), 0.04, 14);
  const AdjacencyInfo adj = build_adjacency(mesh);
  const FieldLossGrad a = laplacian_absolute(adj, mesh.vertices);
  const FieldLossGrad b = laplacian_displacement(adj, mesh.vertices);
  CHECK(a.value == b.value);
  CHECK(a.value ==
        doctest::Approx(oracles::dense_laplacian_loss(adj, mesh.vertices))
            .epsilon(1e-12));
}

TEST_CASE("laplacian gradient matches finite differences") {
  const Mesh mesh = fixtures::jittered(make_icosphere(1), 0.02, 15);
  const AdjacencyInfo adj = build_adjacency(mesh);
  const auto field = fixtures::random_points(mesh.vertex_count(), 16, -0.5, 0.5);

  const FieldLossGrad analytic = laplacian_displacement(adj, field);
  const auto fd = oracles::finite_difference(
      oracles::flatten(field), [&](const std::vector<double>& flat) {
        return laplacian_displacement(adj, oracles::unflatten(flat)).value;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_field), fd) <
        1e-4);
}

TEST_CASE("edge loss") {
  // unit tetrahedron: all edges length 1
  CHECK(edge_loss(fixtures::tetrahedron()).value ==
        doctest::Approx(1.0).epsilon(1e-12));

  // scales as s^2
  const Mesh mesh = fixtures::jittered(make_icosphere(1), 0.03, 17);
  Mesh scaled = mesh;
  for (Vec3& v : scaled.vertices) v *= 3.0;
  CHECK(edge_loss(scaled).value ==
        doctest::Approx(9.0 * edge_loss(mesh).value).epsilon(1e-12));

  // brute force over the edge list
  const AdjacencyInfo adj = build_adjacency(mesh);
  double oracle = 0.0;
  for (const auto& e : oracles::brute_edge_set(mesh))
    oracle += (mesh.vertices[e.first] - mesh.vertices[e.second]).squaredNorm();
  oracle /= static_cast<double>(adj.edges.size());
  CHECK(edge_loss(adj, mesh.vertices).value == doctest::Approx(oracle).epsilon(1e-12));

  // gradient vs finite differences
  const VertexLossGrad analytic = edge_loss(adj, mesh.vertices);
  const auto fd = oracles::finite_difference(
      oracles::flatten(mesh.vertices), [&](const std::vector<double>& flat) {
        return edge_loss(adj, oracles::unflatten(flat)).value;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_vertices), fd) <
        1e-4);

  Mesh no_edges;
  no_edges.vertices = {{0, 0, 0}};
  CHECK_THROWS_AS(edge_loss(no_edges), ValidationError);
}

TEST_CASE("rigid-motion invariance of the loss stack") {
  const Mesh pred_mesh = fixtures::bumpy_sphere(2);
  const Mesh gt_mesh = fixtures::jittered(make_icosphere(2), 0.02, 18);
  const SampledCloud pred = cloud_on_mesh(pred_mesh, 300, 19);
  SampledCloud gt = resample_as_vertices(gt_mesh);
  gt.curvature_weight.assign(gt.size(), 1.5);

  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.9, Vec3(1, 1, 1).normalized()).toRotationMatrix();
  const Vec3 t(0.2, -0.7, 1.4);
  const SampledCloud pred_m = transformed_cloud(pred, rot, t);
  const SampledCloud gt_m = transformed_cloud(gt, rot, t);

  CHECK(std::abs(chamfer_curvature(pred, gt).value -
                 chamfer_curvature(pred_m, gt_m).value) < 1e-9);

  Mesh moved = pred_mesh;
  for (Vec3& v : moved.vertices) v = rot * v + t;
  CHECK(std::abs(intra_normal_consistency(pred_mesh).value -
                 intra_normal_consistency(moved).value) < 1e-9);
  CHECK(std::abs(edge_loss(pred_mesh).value - edge_loss(moved).value) < 1e-9);
  CHECK(std::abs(inter_normal_consistency(pred, gt, pred_mesh).value -
                 inter_normal_consistency(pred_m, gt_m, moved).value) < 1e-9);

  const AdjacencyInfo adj = build_adjacency(pred_mesh);
  const auto disp = fixtures::random_points(pred_mesh.vertex_count(), 20, -0.1, 0.1);
  std::vector<Vec3> disp_rot(disp.size());
  for (std::size_t i = 0; i < disp.size(); ++i) disp_rot[i] = rot * disp[i];
  CHECK(std::abs(laplacian_displacement(adj, disp).value -
                 laplacian_displacement(adj, disp_rot).value) < 1e-9);
}

TEST_CASE("weights JSON schema") {
  const std::string good = R"({"classes": {
    "wm":   {"chamfer": 1.0, "inter_nc": 0.01,   "laplacian": 0.1,  "intra_nc": 0.001,   "edge": 5.0},
    "pial": {"chamfer": 1.0, "inter_nc": 0.0125, "laplacian": 0.25, "intra_nc": 0.00225, "edge": 5.0}
  }})";
  const LossWeights w = parse_weights_json(good);
  CHECK(w.at("wm").edge == 5.0);
  CHECK(w.at("pial").laplacian == 0.25);
  CHECK(w.at("pial").intra_nc == 0.00225);
  CHECK_THROWS_AS(w.at("subcortical"), ValidationError);

  // round trip
  const LossWeights again = parse_weights_json(weights_to_json(w));
  CHECK(again.at("wm").inter_nc == 0.01);

  CHECK_THROWS_AS(parse_weights_json("{"), ValidationError);
  CHECK_THROWS_AS(parse_weights_json(R"({"classes": {"wm": {"chamfer": -1}}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_weights_json(R"({"classes": {"wm": {"chamfur": 1}}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_weights_json(R"({"nope": 1})"), ValidationError);
}

namespace {

struct TotalFixture {
  Mesh mesh;
  AdjacencyInfo adj;
  std::vector<Vec3> disp;
  SampledCloud pred;
  SampledCloud gt;
  StageClassTerm term(const std::string& cls) const {
    StageClassTerm t;
    t.stage = 1;
    t.class_name = cls;
    t.mesh = &mesh;
    t.adjacency = &adj;
    t.displacement = &disp;
    t.pred_cloud = &pred;
    t.gt_cloud = &gt;
    return t;
  }
};

TotalFixture make_total_fixture(std::uint64_t seed) {
  TotalFixture fx;
  fx.mesh = fixtures::jittered(make_icosphere(1), 0.03, seed);
  fx.adj = build_adjacency(fx.mesh);
  fx.disp = fixtures::random_points(fx.mesh.vertex_count(), seed + 1, -0.05, 0.05);
  fx.pred = sample_surface(fx.mesh, 60, seed + 2);
  const Mesh target = fixtures::jittered(make_icosphere(1), 0.05, seed + 3);
  SampledCloud gt = resample_as_vertices(target);
  gt.curvature_weight.resize(gt.size());
  for (Index i = 0; i < gt.size(); ++i)
    gt.curvature_weight[i] = fixtures::uniform(seed + 4, i, 0, 1.0, 5.0);
  fx.gt = std::move(gt);
  return fx;
}

}  // namespace

TEST_CASE("total mesh loss composition") {
  const TotalFixture fx = make_total_fixture(40);
  LossWeights weights;
  weights.classes["wm"] = {1.0, 0.01, 0.1, 0.001, 5.0};

  const StageClassTerm term = fx.term("wm");
  const TotalLossResult r = total_mesh_loss({&term, 1}, weights);
  const LossBreakdownRow& row = r.breakdown.rows[0];
  CHECK(std::abs(row.weighted_total -
                 (1.0 * row.chamfer + 0.01 * row.inter_nc + 0.1 * row.laplacian +
                  0.001 * row.intra_nc + 5.0 * row.edge)) < 1e-12);
  CHECK(r.breakdown.grand_total == doctest::Approx(row.weighted_total));

  // all weights zero: zero total, zero gradients
  LossWeights zero;
  zero.classes["wm"] = {};
  const TotalLossResult rz = total_mesh_loss({&term, 1}, zero);
  CHECK(rz.breakdown.grand_total == 0.0);
  for (const Vec3& g : rz.grad_vertices[0]) CHECK(g.norm() == 0.0);

  // chamfer-only reduction equals the standalone loss
  LossWeights chamfer_only;
  chamfer_only.classes["wm"] = {1.0, 0.0, 0.0, 0.0, 0.0};
  const TotalLossResult rc = total_mesh_loss({&term, 1}, chamfer_only);
  CHECK(rc.breakdown.grand_total == chamfer_curvature(fx.pred, fx.gt).value);

  // missing class
  LossWeights other;
  other.classes["pial"] = {1, 0, 0, 0, 0};
  CHECK_THROWS_AS(total_mesh_loss({&term, 1}, other), ValidationError);
}

TEST_CASE("total mesh loss gradient matches finite differences through sampling") {
  const TotalFixture fx = make_total_fixture(50);
  LossWeights weights;
  weights.classes["wm"] = {1.0, 0.01, 0.1, 0.001, 5.0};
  const StageClassTerm term = fx.term("wm");
  const TotalLossResult analytic = total_mesh_loss({&term, 1}, weights);

  const auto fd = oracles::finite_difference(
      oracles::flatten(fx.mesh.vertices), [&](const std::vector<double>& flat) {
        TotalFixture moved = fx;
        moved.mesh.vertices = oracles::unflatten(flat);
        // displacement moves with the vertices (disp = current - previous)
        for (std::size_t i = 0; i < moved.disp.size(); ++i)
          moved.disp[i] += moved.mesh.vertices[i] - fx.mesh.vertices[i];
        update_cloud_geometry(moved.pred, moved.mesh);
        const StageClassTerm t = moved.term("wm");
        return total_mesh_loss({&t, 1}, weights, ChamferMode::curvature, false)
            .breakdown.grand_total;
      });
  CHECK(oracles::max_relative_error(oracles::flatten(analytic.grad_vertices[0]), fd) <
        1e-4);
}

TEST_CASE("high-curvature points are pulled harder (supplementary construction)") {
  // ground-truth points a, b with kappa(a) < kappa(b); equidistant
  // predictions u, v; after one fixed step the high-kappa point is closer.
  const Vec3 a(0, 0, 0), b(10, 0, 0);
  const Vec3 u = a + Vec3(0.5, 0, 0), v = b + Vec3(0.5, 0, 0);
  const double lambda = 0.02;

  SampledCloud gt_a = fixtures::make_cloud({a}, 1);
  gt_a.curvature_weight = {1.0};
  SampledCloud gt_b = fixtures::make_cloud({b}, 2);
  gt_b.curvature_weight = {3.0};

  const PointLossGrad ga = chamfer_curvature(fixtures::make_cloud({u}, 3), gt_a);
  const PointLossGrad gb = chamfer_curvature(fixtures::make_cloud({v}, 4), gt_b);

  const Vec3 u2 = gradient_step_fixed({u}, ga.grad_points, lambda)[0];
  const Vec3 v2 = gradient_step_fixed({v}, gb.grad_points, lambda)[0];
  CHECK((v2 - b).norm() < (u2 - a).norm());
  // exact proportionality: moved by 4*lambda*kappa of the offset
  CHECK((u2 - a).norm() == doctest::Approx(0.5 * (1 - 4 * lambda * 1.0)).epsilon(1e-12));
  CHECK((v2 - b).norm() == doctest::Approx(0.5 * (1 - 4 * lambda * 3.0)).epsilon(1e-12));
}
