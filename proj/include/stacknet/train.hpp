#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stacknet/net.hpp"
#include "stacknet/tasks.hpp"

namespace stacknet {

enum class Optimizer { gd, adam_then_gd };

struct TrainConfig {
  double lambda = 1e-2;
  Optimizer optimizer = Optimizer::adam_then_gd;
  int adam_iters = 2000;
  double adam_lr = 5e-3;
  int max_iters = 20000;  // gd phase cap
  double gd_init_step = 1.0;
  double grad_norm_tol = 1e-7;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  int restarts = 5;
  bool parallel_restarts = true;

  void validate() const;
};

struct TrainReport {
  double final_objective = 0.0;
  double final_loss = 0.0;
  double final_param_norm_sq = 0.0;
  double final_network_cost = 0.0;  // balanced, bias_reg with matching skips
  std::vector<double> objective_trace;  // best restart; adam then gd phase
  std::vector<double> grad_norm_trace;
  int gd_start_index = 0;  // first trace index of the gd phase
  int iterations = 0;
  bool converged = false;
  int best_restart = -1;
  std::vector<double> restart_objectives;  // NaN for diverged restarts
  std::vector<std::string> warnings;
};

double sq_loss(const NetworkParams& net, const Architecture& arch, const Dataset& data);
double objective(const NetworkParams& net, const Architecture& arch, const Dataset& data,
                 double lambda);

// Exact gradient of the objective (off kink hyperplanes), same shape as net.
NetworkParams gradient(const NetworkParams& net, const Architecture& arch,
                       const Dataset& data, double lambda);
Eigen::VectorXd gradient_flat(const NetworkParams& net, const Architecture& arch,
                              const Dataset& data, double lambda);

// Uniform entries in [-init_scale/sqrt(fan_in), +init_scale/sqrt(fan_in)].
NetworkParams init_params(const Architecture& arch, std::uint64_t seed, double init_scale);

// Best-of-restarts full-batch minimization of sq_loss + lambda |theta|^2.
// Each restart runs the adaptive warm phase, then plain gradient descent
// with backtracking until the gradient norm tolerance; the returned
// parameters are balanced (function-preserving, norm-reducing).
std::pair<NetworkParams, TrainReport> train(const Architecture& arch, const Dataset& data,
                                            const TrainConfig& cfg);

// CSV with one row per iteration, and a flat JSON summary record.
void write_report_csv(const TrainReport& report, const std::string& path);
void write_report_summary(const TrainReport& report, const std::string& path);

}  // namespace stacknet
