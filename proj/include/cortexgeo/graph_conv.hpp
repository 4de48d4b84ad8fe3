#pragma once

#include "cortexgeo/mesh.hpp"

#include <Eigen/Dense>

namespace cortexgeo {

// Message-passing graph convolution over mesh adjacency:
//   f'_i = (W0 f_i + b0 + sum_{j in N(i)} (W1 f_j + b1)) / (1 + |N(i)|)
struct GraphConvParams {
  Eigen::MatrixXd w0;  // d_out x d_in
  Eigen::MatrixXd w1;  // d_out x d_in
  Eigen::VectorXd b0;  // d_out
  Eigen::VectorXd b1;  // d_out
};

// features: V x d_in (one row per vertex); returns V x d_out.
Eigen::MatrixXd graph_conv_forward(const Eigen::MatrixXd& features,
                                   const AdjacencyInfo& adj,
                                   const GraphConvParams& params);

struct GraphConvGrads {
  Eigen::MatrixXd features;  // V x d_in
  GraphConvParams params;
};

// Vector-Jacobian product: upstream is V x d_out.
GraphConvGrads graph_conv_vjp(const Eigen::MatrixXd& upstream,
                              const Eigen::MatrixXd& features,
                              const AdjacencyInfo& adj,
                              const GraphConvParams& params);

}  // namespace cortexgeo
