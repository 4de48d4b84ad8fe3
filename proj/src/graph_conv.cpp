#include "cortexgeo/graph_conv.hpp"

namespace cortexgeo {

namespace {

void check_shapes(const Eigen::MatrixXd& features, const AdjacencyInfo& adj,
                  const GraphConvParams& p) {
  if (static_cast<std::size_t>(features.rows()) != adj.neighbors.size())
    throw ValidationError("graph_conv: feature row count != vertex count");
  if (p.w0.rows() != p.w1.rows() || p.w0.cols() != p.w1.cols())
    throw ValidationError("graph_conv: W0/W1 shape mismatch");
  if (p.w0.cols() != features.cols())
    throw ValidationError("graph_conv: W columns != feature dimension");
  if (p.b0.size() != p.w0.rows() || p.b1.size() != p.w0.rows())
    throw ValidationError("graph_conv: bias dimension mismatch");
}

Eigen::MatrixXd neighbor_sum(const Eigen::MatrixXd& rows, const AdjacencyInfo& adj) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < adj.neighbors.size(); ++i)
    for (Index j : adj.neighbors[i]) sum.row(i) += rows.row(j);
  return sum;
}

}  // namespace

Eigen::MatrixXd graph_conv_forward(const Eigen::MatrixXd& features,
                                   const AdjacencyInfo& adj,
                                   const GraphConvParams& p) {
  check_shapes(features, adj, p);
  const Eigen::Index nv = features.rows();
  const Eigen::MatrixXd self = features * p.w0.transpose();
  const Eigen::MatrixXd nsum = neighbor_sum(features, adj) * p.w1.transpose();

  Eigen::MatrixXd out(nv, p.w0.rows());
  for (Eigen::Index i = 0; i < nv; ++i) {
    const double deg = static_cast<double>(adj.neighbors[i].size());
    out.row(i) = (self.row(i) + p.b0.transpose() + nsum.row(i) +
                  deg * p.b1.transpose()) /
                 (1.0 + deg);
  }
  return out;
}

GraphConvGrads graph_conv_vjp(const Eigen::MatrixXd& upstream,
                              const Eigen::MatrixXd& features,
                              const AdjacencyInfo& adj,
                              const GraphConvParams& p) {
  check_shapes(features, adj, p);
  if (upstream.rows() != features.rows() || upstream.cols() != p.w0.rows())
    throw ValidationError("graph_conv_vjp: upstream shape mismatch");

  const Eigen::Index nv = features.rows();
  // h_i = upstream_i / (1 + deg_i)
  Eigen::MatrixXd h(nv, upstream.cols());
  Eigen::VectorXd deg(nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    deg(i) = static_cast<double>(adj.neighbors[i].size());
    h.row(i) = upstream.row(i) / (1.0 + deg(i));
  }
  const Eigen::MatrixXd hsum = neighbor_sum(h, adj);     // sum_{j in N(i)} h_j
  const Eigen::MatrixXd fsum = neighbor_sum(features, adj);

  GraphConvGrads g;
  g.features = h * p.w0 + hsum * p.w1;
  g.params.w0 = h.transpose() * features;
  g.params.w1 = h.transpose() * fsum;
  g.params.b0 = h.colwise().sum().transpose();
  g.params.b1 = (h.array().colwise() * deg.array()).colwise().sum().transpose();
  return g;
}

}  // namespace cortexgeo
