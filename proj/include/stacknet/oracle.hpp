#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stacknet/net.hpp"
#include "stacknet/pfunc.hpp"
#include "stacknet/tasks.hpp"

namespace stacknet {

// One ridge atom on the line: direction s in {-1, +1}, kink xi, and a
// penalty weight rho. The atom's feature is relu(s x - s xi).
struct GridAtom {
  double s = 1.0;
  double xi = 0.0;
  double rho = 2.0;
};

struct Grid {
  std::vector<GridAtom> atoms;
  PenaltyKind kind = PenaltyKind::bias_reg;
  double atom_factor = 2.0;
  Eigen::Index size() const { return static_cast<Eigen::Index>(atoms.size()); }
};

struct SolverConfig {
  double tol = 1e-8;        // stop when the stationarity residual is below this
  int max_iters = 400000;
  int check_every = 25;     // residual check cadence
  double act_tol = 1e-6;    // |W_g| threshold defining the active set
};

struct OracleSolution {
  Grid grid;
  Eigen::MatrixXd weights;    // G x d_out
  Eigen::VectorXd intercept;  // d_out
  double objective = 0.0;
  double penalty = 0.0;  // sum_g rho_g |W_g| + |c|^2, unscaled by lambda
  double kkt = 0.0;
  bool converged = false;
  int iterations = 0;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // accepted objective per iteration

  std::vector<int> active_set(double act_tol = 1e-6) const;
};

// Kink grid covering [min x - margin, max x + margin] with `resolution`
// uniform points plus every training input, both directions. rho follows
// the penalty kind: atom_factor * sqrt(xi^2 + 1) or atom_factor.
Grid build_grid(const Dataset& data, int resolution, double margin,
                PenaltyKind kind = PenaltyKind::bias_reg, double atom_factor = 2.0);

// Feature matrix, rows = samples, columns = atoms.
Eigen::MatrixXd atom_features(const Grid& grid, const Eigen::VectorXd& xs);

// Minimizes sum_i |pred(x_i) - y_i|^2 + lambda |c|^2 + lambda sum_g rho_g |W_g|
// (masked entries dropped) by accelerated proximal gradient with function
// restart. The step comes from a power-iteration Lipschitz bound.
OracleSolution solve_group_lasso(const Dataset& data, double lambda, const Grid& grid,
                                 const SolverConfig& cfg = {});

// One independent single-output solve per task; group size 1 makes the
// penalty an l1 norm, so tasks cannot influence each other.
std::vector<OracleSolution> solve_separate(const Dataset& data, double lambda,
                                           const Grid& grid, const SolverConfig& cfg = {});

// Stationarity certificate: max over groups of the violated optimality
// condition, plus intercept stationarity. Zero at an exact optimum.
double kkt_residual(const OracleSolution& sol, const Dataset& data, double lambda);

Eigen::VectorXd oracle_predict(const OracleSolution& sol, double x);
Eigen::MatrixXd oracle_predict_batch(const OracleSolution& sol, const Eigen::VectorXd& xs);

// Realizes the solution as a balanced single-stack network: one neuron per
// active atom, objective preserved.
std::pair<NetworkParams, Architecture> atoms_to_network(const OracleSolution& sol,
                                                        double act_tol = 1e-6);

// CSV atom rows s, xi, rho, W components, followed by a summary file.
void write_solution_csv(const OracleSolution& sol, const std::string& path);
void write_solution_summary(const OracleSolution& sol, const std::string& path);

}  // namespace stacknet
