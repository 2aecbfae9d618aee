#include "stacknet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "stacknet/io.hpp"
#include "stacknet/kernels.hpp"

namespace stacknet {

std::vector<int> OracleSolution::active_set(double act_tol) const {
  std::vector<int> idx;
  for (Eigen::Index g = 0; g < weights.rows(); ++g)
    if (weights.row(g).norm() > act_tol) idx.push_back(static_cast<int>(g));
  return idx;
}

Grid build_grid(const Dataset& data, int resolution, double margin, PenaltyKind kind,
                double atom_factor) {
  data.validate();
  if (data.d_in() != 1)
    throw std::invalid_argument("build_grid: only one-dimensional inputs are supported");
  if (resolution < data.n())
    throw std::invalid_argument("build_grid: resolution must be >= number of samples");
  if (margin < 0.0) throw std::invalid_argument("build_grid: margin must be >= 0");

  std::set<double> xs;
  for (Eigen::Index i = 0; i < data.n(); ++i) xs.insert(data.X(i, 0));
  const double lo = *xs.begin() - margin;
  const double hi = *xs.rbegin() + margin;
  if (resolution == 1) {
    xs.insert(lo);
  } else {
    for (int i = 0; i < resolution; ++i)
      xs.insert(lo + (hi - lo) * static_cast<double>(i) / (resolution - 1));
  }

  Grid grid;
  grid.kind = kind;
  grid.atom_factor = atom_factor;
  grid.atoms.reserve(2 * xs.size());
  for (double s : {+1.0, -1.0})
    for (double xi : xs) {
      GridAtom atom;
      atom.s = s;
      atom.xi = xi;
      atom.rho = kind == PenaltyKind::bias_reg
                     ? atom_factor * std::sqrt(xi * xi + 1.0)
                     : atom_factor;
      grid.atoms.push_back(atom);
    }
  return grid;
}

Eigen::MatrixXd atom_features(const Grid& grid, const Eigen::VectorXd& xs) {
  Eigen::MatrixXd phi(xs.size(), grid.size());
  parallel_for(xs.size(), [&](std::int64_t i) {
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      const GridAtom& a = grid.atoms[static_cast<std::size_t>(g)];
      phi(i, g) = relu(a.s * (xs(i) - a.xi));
    }
  });
  return phi;
}

namespace {

struct Problem {
  Eigen::MatrixXd phi;   // N x G
  Eigen::MatrixXd y;     // N x d
  Eigen::MatrixXd mask;  // N x d (all ones when absent)
  Eigen::VectorXd rho;   // G
  double lambda = 0.0;
};

Problem make_problem(const Dataset& data, double lambda, const Grid& grid) {
  if (data.d_in() != 1)
    throw std::invalid_argument("solve_group_lasso: one-dimensional inputs only");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_group_lasso: lambda must be > 0");
  Problem p;
  p.phi = atom_features(grid, data.X.col(0));
  p.y = data.Y;
  p.mask = data.has_mask() ? data.mask : Eigen::MatrixXd::Ones(data.n(), data.d_out());
  p.rho.resize(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    p.rho(g) = grid.atoms[static_cast<std::size_t>(g)].rho;
  p.lambda = lambda;
  return p;
}

Eigen::MatrixXd masked_residual(const Problem& p, const Eigen::MatrixXd& w,
                                const Eigen::VectorXd& c) {
  return (design_apply(p.phi, w, c) - p.y).cwiseProduct(p.mask);
}

double smooth_value(const Problem& p, const Eigen::VectorXd& c,
                    const Eigen::MatrixXd& resid) {
  const double fit = block_sum(resid.rows(), [&](std::int64_t i) {
    return resid.row(i).squaredNorm();
  });
  return fit + p.lambda * c.squaredNorm();
}

double penalty_value(const Problem& p, const Eigen::MatrixXd& w) {
  double s = 0.0;
  for (Eigen::Index g = 0; g < w.rows(); ++g) s += p.rho(g) * w.row(g).norm();
  return s;
}

double full_objective(const Problem& p, const Eigen::MatrixXd& w, const Eigen::VectorXd& c) {
  const Eigen::MatrixXd resid = masked_residual(p, w, c);
  return smooth_value(p, c, resid) + p.lambda * penalty_value(p, w);
}

// Gradient of the smooth part (fit + intercept ridge).
void smooth_gradient(const Problem& p, const Eigen::MatrixXd& resid,
                     const Eigen::VectorXd& c, Eigen::MatrixXd& grad_w,
                     Eigen::VectorXd& grad_c) {
  grad_w = 2.0 * design_adjoint(p.phi, resid);
  grad_c = 2.0 * resid.colwise().sum().transpose() + 2.0 * p.lambda * c;
}

// Largest eigenvalue of the per-output smooth Hessian, via power iteration
// on 2 [Phi 1]^T diag(mask_k) [Phi 1] + 2 lambda e_c e_c^T.
double lipschitz_bound(const Problem& p) {
  const Eigen::Index g = p.phi.cols();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.y.cols(); ++k) {
    Eigen::VectorXd u = Eigen::VectorXd::Ones(g + 1);
    u.normalize();
    double eig = 0.0;
    for (int it = 0; it < 80; ++it) {
      Eigen::VectorXd zu = p.phi * u.head(g) + Eigen::VectorXd::Constant(p.phi.rows(), u(g));
      zu = zu.cwiseProduct(p.mask.col(k));
      Eigen::VectorXd next(g + 1);
      next.head(g) = 2.0 * (p.phi.transpose() * zu);
      next(g) = 2.0 * zu.sum() + 2.0 * p.lambda * u(g);
      eig = next.norm();
      if (eig == 0.0) break;
      u = next / eig;
    }
    worst = std::max(worst, eig);
  }
  return std::max(worst, 1e-12);
}

void prox_groups(Eigen::MatrixXd& w, const Eigen::VectorXd& rho, double t_lambda) {
  parallel_for(w.rows(), [&](std::int64_t g) {
    const double norm = w.row(g).norm();
    const double thr = t_lambda * rho(g);
    if (norm <= thr)
      w.row(g).setZero();
    else
      w.row(g) *= 1.0 - thr / norm;
  });
}

double stationarity(const Problem& p, const Eigen::MatrixXd& w, const Eigen::VectorXd& c) {
  const Eigen::MatrixXd resid = masked_residual(p, w, c);
  const Eigen::MatrixXd fit_grad = 2.0 * design_adjoint(p.phi, resid);
  double worst = 0.0;
  for (Eigen::Index g = 0; g < w.rows(); ++g) {
    const double wnorm = w.row(g).norm();
    const double bound = p.lambda * p.rho(g);
    double r;
    if (wnorm > 0.0)
      r = (fit_grad.row(g) + bound * w.row(g) / wnorm).norm();
    else
      r = std::max(0.0, fit_grad.row(g).norm() - bound);
    worst = std::max(worst, r);
  }
  const Eigen::VectorXd grad_c =
      2.0 * resid.colwise().sum().transpose() + 2.0 * p.lambda * c;
  return std::max(worst, grad_c.norm());
}

}  // namespace

OracleSolution solve_group_lasso(const Dataset& data, double lambda, const Grid& grid,
                                 const SolverConfig& cfg) {
  data.validate();
  const Problem p = make_problem(data, lambda, grid);
  const Eigen::Index g = p.phi.cols();
  const Eigen::Index d = p.y.cols();

  const double step = 1.0 / (1.05 * lipschitz_bound(p));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g, d);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd wy = w;
  Eigen::VectorXd cy = c;
  double momentum = 1.0;
  double fcur = full_objective(p, w, c);

  OracleSolution sol;
  sol.grid = grid;
  sol.lambda = lambda;
  sol.objective_trace.reserve(1024);

  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_c;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    Eigen::MatrixXd resid = masked_residual(p, wy, cy);
    smooth_gradient(p, resid, cy, grad_w, grad_c);
    Eigen::MatrixXd w_next = wy - step * grad_w;
    Eigen::VectorXd c_next = cy - step * grad_c;
    prox_groups(w_next, p.rho, step * lambda);
    double f_next = full_objective(p, w_next, c_next);

    if (f_next > fcur) {
      // Function restart: momentum overshot, take a plain descent step
      // from the last accepted point instead.
      resid = masked_residual(p, w, c);
      smooth_gradient(p, resid, c, grad_w, grad_c);
      w_next = w - step * grad_w;
      c_next = c - step * grad_c;
      prox_groups(w_next, p.rho, step * lambda);
      f_next = full_objective(p, w_next, c_next);
      momentum = 1.0;
    }

    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / momentum_next;
    wy = w_next + beta * (w_next - w);
    cy = c_next + beta * (c_next - c);
    momentum = momentum_next;
    w = w_next;
    c = c_next;
    fcur = f_next;
    sol.objective_trace.push_back(fcur);

    if ((iter + 1) % cfg.check_every == 0 && stationarity(p, w, c) < cfg.tol) {
      sol.converged = true;
      ++iter;
      break;
    }
  }

  sol.weights = w;
  sol.intercept = c;
  sol.iterations = iter;
  sol.objective = fcur;
  sol.penalty = penalty_value(p, w) + c.squaredNorm();
  sol.kkt = stationarity(p, w, c);
  if (!sol.converged) sol.converged = sol.kkt < cfg.tol;
  return sol;
}

std::vector<OracleSolution> solve_separate(const Dataset& data, double lambda,
                                           const Grid& grid, const SolverConfig& cfg) {
  std::vector<OracleSolution> out;
  out.reserve(static_cast<std::size_t>(data.d_out()));
  for (Eigen::Index k = 0; k < data.d_out(); ++k)
    out.push_back(solve_group_lasso(data.task_column(k), lambda, grid, cfg));
  return out;
}

double kkt_residual(const OracleSolution& sol, const Dataset& data, double lambda) {
  const Problem p = make_problem(data, lambda, sol.grid);
  return stationarity(p, sol.weights, sol.intercept);
}

Eigen::VectorXd oracle_predict(const OracleSolution& sol, double x) {
  Eigen::VectorXd out = sol.intercept;
  for (Eigen::Index g = 0; g < sol.weights.rows(); ++g) {
    const GridAtom& a = sol.grid.atoms[static_cast<std::size_t>(g)];
    const double f = relu(a.s * (x - a.xi));
    if (f != 0.0) out += f * sol.weights.row(g).transpose();
  }
  return out;
}

Eigen::MatrixXd oracle_predict_batch(const OracleSolution& sol, const Eigen::VectorXd& xs) {
  return design_apply(atom_features(sol.grid, xs), sol.weights, sol.intercept);
}

std::pair<NetworkParams, Architecture> atoms_to_network(const OracleSolution& sol,
                                                        double act_tol) {
  const std::vector<int> active = sol.active_set(act_tol);
  const int n = static_cast<int>(active.size());
  const int d = static_cast<int>(sol.intercept.size());

  Architecture arch;
  arch.num_stacks = 1;
  arch.dims = {1, d};
  arch.widths = {n};
  arch.skips = {SkipKind::none};

  NetworkParams net = zero_network(arch);
  StackParams& s = net.stacks.front();
  for (int k = 0; k < n; ++k) {
    const GridAtom& a = sol.grid.atoms[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])];
    const Eigen::VectorXd wk =
        sol.weights.row(active[static_cast<std::size_t>(k)]).transpose();
    // Balanced scale: |w| = sqrt(|v|^2 + b^2) per neuron.
    const double beta = std::sqrt(wk.norm() / std::sqrt(a.xi * a.xi + 1.0));
    s.v(k, 0) = a.s * beta;
    s.b(k) = -a.s * a.xi * beta;
    s.w.col(k) = wk / beta;
  }
  s.c = sol.intercept;
  return {std::move(net), std::move(arch)};
}

void write_solution_csv(const OracleSolution& sol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "s,xi,rho";
  for (Eigen::Index k = 0; k < sol.weights.cols(); ++k) os << ",w_" << (k + 1);
  os << '\n';
  for (Eigen::Index g = 0; g < sol.weights.rows(); ++g) {
    const GridAtom& a = sol.grid.atoms[static_cast<std::size_t>(g)];
    os << format_double(a.s) << ',' << format_double(a.xi) << ',' << format_double(a.rho);
    for (Eigen::Index k = 0; k < sol.weights.cols(); ++k)
      os << ',' << format_double(sol.weights(g, k));
    os << '\n';
  }
  os << "intercept,,";
  for (Eigen::Index k = 0; k < sol.intercept.size(); ++k)
    os << ',' << format_double(sol.intercept(k));
  os << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_solution_summary(const OracleSolution& sol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "{\n";
  os << "  \"objective\": " << format_double(sol.objective) << ",\n";
  os << "  \"penalty\": " << format_double(sol.penalty) << ",\n";
  os << "  \"kkt_residual\": " << format_double(sol.kkt) << ",\n";
  os << "  \"lambda\": " << format_double(sol.lambda) << ",\n";
  os << "  \"iterations\": " << sol.iterations << ",\n";
  os << "  \"converged\": " << (sol.converged ? "true" : "false") << ",\n";
  os << "  \"atoms\": " << sol.grid.size() << ",\n";
  os << "  \"active_atoms\": " << sol.active_set().size() << "\n";
  os << "}\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace stacknet
