#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace stacknet {

// Training pairs. mask is optional (empty = every entry observed); when
// present, mask(i, k) in {0, 1} marks whether target Y(i, k) is observed.
// Losses and solvers weight squared residuals by the mask, so tasks with
// different sample counts can share one X.
struct Dataset {
  Eigen::MatrixXd X;  // N x d_in
  Eigen::MatrixXd Y;  // N x d_out
  Eigen::MatrixXd mask;
  std::vector<std::string> names;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d_in() const { return X.cols(); }
  Eigen::Index d_out() const { return Y.cols(); }
  bool has_mask() const { return mask.size() > 0; }
  double weight(Eigen::Index i, Eigen::Index k) const {
    return has_mask() ? mask(i, k) : 1.0;
  }
  void validate() const;  // throws std::invalid_argument

  Dataset task_column(Eigen::Index k) const;
};

// Seven 1-d regression tasks driven by the same periodic phase
// p(x) = sin(2 pi x / period): one kink, absolute value, square, sign,
// cubic, sine, exponential. Each target is standardized to zero mean and
// unit variance (population moments over one period) before noise is added.
// Inputs are uniform over three periods.
Dataset gen_periodic7(int n, double period, double noise_sd, std::uint64_t seed);

// Two tasks sharing the kink set {-1, 0, 1}: a densely sampled low-noise
// task and a second task observed at only four points (the mask hides it
// elsewhere). Built so the joint group penalty and per-task fits place
// kinks differently.
Dataset gen_coupling_pair(std::uint64_t seed);

// Noiseless values of the two coupling-pair target functions, for held-out
// evaluation. Column 0 = dense task, column 1 = sparse task.
Eigen::MatrixXd coupling_truth(const Eigen::VectorXd& xs);

// The x locations at which the sparse task is observed.
Eigen::VectorXd coupling_sparse_inputs();

// CSV with header x_1..x_din,y_1..y_dout and, for masked datasets only,
// m_1..m_dout. 17 significant digits; round-trips exactly.
void save_csv(const Dataset& data, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace stacknet
