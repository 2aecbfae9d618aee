#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "stacknet/tasks.hpp"

namespace stacknet {

// Random first layer (fixed after sampling), ridge-trained output layer.
// The squared output penalty separates over tasks, so joint and per-task
// fits coincide exactly; the contrast class to the trained networks.
struct RandomFeatureModel {
  Eigen::MatrixXd v;  // n x d_in, sampled, never trained
  Eigen::VectorXd b;  // n
  Eigen::MatrixXd w;  // d_out x n, ridge solution
  Eigen::VectorXd c;  // d_out
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

// Samples v iid standard normal and kinks uniform over the input range
// (b = -v xi), then solves the ridge normal equations
// (Phi^T Phi + lambda I) beta_k = Phi^T y_k per output, with Phi the relu
// feature matrix plus a constant column. Masked entries get row weights.
RandomFeatureModel fit_random_features(const Dataset& data, double lambda, int n,
                                       std::uint64_t seed);

Eigen::VectorXd baseline_predict(const RandomFeatureModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd baseline_predict_batch(const RandomFeatureModel& model,
                                       const Eigen::MatrixXd& xs);

}  // namespace stacknet
