#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stacknet/baselines.hpp"
#include "stacknet/net.hpp"
#include "stacknet/oracle.hpp"
#include "stacknet/tasks.hpp"
#include "stacknet/train.hpp"

namespace stacknet {

// ---------------------------------------------------------------------------
// Wide single-stack net vs. the convex grid oracle.

struct TheoremCheckConfig {
  int n_samples = 8;
  int d_out = 2;
  int width = 64;
  double lambda = 1e-2;
  int resolution = 512;
  double margin = 1.0;
  std::uint64_t seed = 1;
  double gap_tol = 0.02;   // relative objective gap
  double cost_tol = 0.05;  // network cost vs. oracle penalty
  double sup_tol = 0.05;   // sup distance / target sd
  TrainConfig train;
};

struct TheoremCheckResult {
  double trained_objective = 0.0;
  double oracle_objective = 0.0;
  double objective_gap = 0.0;
  double network_cost = 0.0;
  double oracle_penalty = 0.0;
  double cost_gap = 0.0;
  double sup_distance = 0.0;
  double target_sd = 0.0;
  double sup_ratio = 0.0;
  double oracle_kkt = 0.0;
  bool pass_gap = false, pass_cost = false, pass_sup = false;
  bool pass() const { return pass_gap && pass_cost && pass_sup; }

  Dataset data;
  NetworkParams net;
  Architecture arch;
  OracleSolution oracle;
};

// Fixed 1-d regression instance used by the check: smooth two-output
// targets with mild noise, deterministic in the seed.
Dataset gen_theorem_instance(int n, int d_out, std::uint64_t seed);

TheoremCheckResult run_theorem_check(const TheoremCheckConfig& cfg);

// ---------------------------------------------------------------------------
// Group coupling vs. per-task fits on the shared-kink pair.

struct MultitaskDemoConfig {
  std::uint64_t seed = 1;
  double lambda = 0.02;
  int resolution = 256;
  double margin = 0.5;
  int rf_features = 200;
  bool run_nets = false;  // nets are informative but not needed for the checks
  TrainConfig train;
};

struct MultitaskDemoResult {
  std::vector<int> joint_task2_active;     // atom indices, shared grid
  std::vector<int> separate_task2_active;
  bool active_sets_differ = false;
  double joint_task2_mse = 0.0;     // held-out, noiseless truth
  double separate_task2_mse = 0.0;
  double baseline_task2_mse = 0.0;
  double baseline_joint_vs_separate = 0.0;  // max abs prediction difference
  double net_joint_task2_mse = -1.0;        // -1 when nets were not run
  double net_separate_task2_mse = -1.0;
  double joint_kkt = 0.0, separate_kkt = 0.0;

  Dataset data;
  OracleSolution joint;
  std::vector<OracleSolution> separate;
  Eigen::VectorXd holdout_x;
};

MultitaskDemoResult run_multitask_demo(const MultitaskDemoConfig& cfg);

// ---------------------------------------------------------------------------
// Bottleneck width sweep on a small fixed dataset.

struct WidthSweepConfig {
  int n_samples = 6;
  std::uint64_t seed = 3;
  double lambda = 1e-3;
  int hidden = 32;  // neurons per stack
  std::vector<int> bottlenecks;  // default 1..N+1 and 2(N+1)
  double plateau_tol = 0.05;
  TrainConfig train;
};

struct WidthSweepResult {
  std::vector<int> bottlenecks;
  std::vector<double> objectives;  // best of restarts per width
  double best_objective = 0.0;
  double objective_at_n_plus_1 = 0.0;
  bool plateau_pass = false;
};

WidthSweepResult run_width_sweep(const WidthSweepConfig& cfg);

// ---------------------------------------------------------------------------
// Joint vs. per-task training of the three-stack skip architecture on the
// seven periodic tasks.

struct Periodic7Config {
  int n_train = 48;
  int n_holdout = 512;
  double period = 1.0;
  double noise_sd = 0.15;
  int num_seeds = 3;
  std::uint64_t seed0 = 11;
  double lambda = 2e-3;
  std::vector<int> widths = {64, 64, 64};
  TrainConfig train;
  std::string out_dir;  // when set, per-stack SVG plots are written here
};

struct Periodic7Result {
  std::vector<double> joint_mse;     // per seed, mean over the 7 tasks
  std::vector<double> separate_mse;  // per seed
  double joint_mean = 0.0;
  double separate_mean = 0.0;
  bool joint_wins = false;
  std::vector<std::string> plot_files;
};

Periodic7Result run_periodic7(const Periodic7Config& cfg);

// Three-stack architecture with unit bottlenecks and a linear skip on every
// stack; d_out outputs.
Architecture periodic7_architecture(int d_out, const std::vector<int>& widths);

}  // namespace stacknet
