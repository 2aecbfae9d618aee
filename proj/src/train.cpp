#include "stacknet/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "stacknet/io.hpp"
#include "stacknet/kernels.hpp"
#include "stacknet/pfunc.hpp"
#include "stacknet/rng.hpp"

namespace stacknet {

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("train: lambda must be > 0");
  if (!(grad_norm_tol > 0.0)) throw std::invalid_argument("train: grad_norm_tol must be > 0");
  if (max_iters < 0 || adam_iters < 0) throw std::invalid_argument("train: negative budget");
  if (restarts < 1) throw std::invalid_argument("train: restarts must be >= 1");
  if (init_scale < 0.0) throw std::invalid_argument("train: init_scale must be >= 0");
}

namespace {

void check_data(const Architecture& arch, const Dataset& data) {
  data.validate();
  if (data.d_in() != arch.d_in() || data.d_out() != arch.d_out())
    throw std::invalid_argument("dataset dimensions do not match architecture");
}

struct StackCache {
  Eigen::VectorXd x, z, a, out;
};

Eigen::VectorXd forward_cached(const NetworkParams& net, const Architecture& arch,
                               const Eigen::VectorXd& x0, std::vector<StackCache>& caches) {
  Eigen::VectorXd h = x0;
  caches.resize(net.stacks.size());
  for (std::size_t j = 0; j < net.stacks.size(); ++j) {
    const StackParams& s = net.stacks[j];
    StackCache& cache = caches[j];
    cache.x = h;
    cache.z = s.b + s.v * h;
    cache.a = cache.z.unaryExpr([](double t) { return relu(t); });
    cache.out = s.w * cache.a + s.c;
    if (s.skip_kind == SkipKind::linear)
      cache.out += s.skip * h;
    else if (s.skip_kind == SkipKind::factored_linear)
      cache.out += s.skip_a2 * (s.skip_a1 * h);
    h = cache.out;
    if (j + 1 < net.stacks.size() && arch.inner_activation == Activation::relu)
      h = h.unaryExpr([](double t) { return relu(t); });
  }
  return h;
}

struct StackOffsets {
  Eigen::Index v, b, w, c, a1, a2;
};

std::vector<StackOffsets> flat_layout(const Architecture& arch) {
  std::vector<StackOffsets> offs(static_cast<std::size_t>(arch.num_stacks));
  Eigen::Index pos = 0;
  for (int j = 0; j < arch.num_stacks; ++j) {
    const Eigen::Index n = arch.widths[static_cast<std::size_t>(j)];
    const Eigen::Index dp = arch.dims[static_cast<std::size_t>(j)];
    const Eigen::Index d = arch.dims[static_cast<std::size_t>(j) + 1];
    StackOffsets& o = offs[static_cast<std::size_t>(j)];
    o.v = pos; pos += n * dp;
    o.b = pos; pos += n;
    o.w = pos; pos += d * n;
    o.c = pos; pos += d;
    o.a1 = o.a2 = -1;
    if (arch.skips[static_cast<std::size_t>(j)] == SkipKind::linear) {
      o.a1 = pos; pos += d * dp;  // reused for the single skip matrix
    } else if (arch.skips[static_cast<std::size_t>(j)] == SkipKind::factored_linear) {
      const Eigen::Index m = Architecture::factored_inner_dim(static_cast<int>(d),
                                                              static_cast<int>(dp));
      o.a1 = pos; pos += m * dp;
      o.a2 = pos; pos += d * m;
    }
  }
  return offs;
}

void add_outer(Eigen::VectorXd& acc, Eigen::Index base, const Eigen::VectorXd& col,
               const Eigen::VectorXd& row) {
  // acc[base + i*cols + j] += col(i) * row(j), matching pack()'s row-major order.
  const Eigen::Index cols = row.size();
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const Eigen::Index off = base + i * cols;
    for (Eigen::Index j = 0; j < cols; ++j) acc(off + j) += col(i) * row(j);
  }
}

void add_vec(Eigen::VectorXd& acc, Eigen::Index base, const Eigen::VectorXd& val) {
  acc.segment(base, val.size()) += val;
}

// Adds one sample's loss gradient (data term only) into acc.
void backward_sample(const NetworkParams& net, const Architecture& arch,
                     const Dataset& data, Eigen::Index i,
                     const std::vector<StackOffsets>& offs, Eigen::VectorXd& acc) {
  std::vector<StackCache> caches;
  const Eigen::VectorXd pred = forward_cached(net, arch, data.X.row(i).transpose(), caches);
  Eigen::VectorXd delta(pred.size());
  for (Eigen::Index k = 0; k < pred.size(); ++k)
    delta(k) = 2.0 * data.weight(i, k) * (pred(k) - data.Y(i, k));

  for (int j = arch.num_stacks - 1; j >= 0; --j) {
    const StackParams& s = net.stacks[static_cast<std::size_t>(j)];
    const StackCache& cache = caches[static_cast<std::size_t>(j)];
    const StackOffsets& o = offs[static_cast<std::size_t>(j)];
    add_vec(acc, o.c, delta);
    add_outer(acc, o.w, delta, cache.a);
    Eigen::VectorXd dz = (s.w.transpose() * delta).cwiseProduct(
        cache.z.unaryExpr([](double t) { return relu_deriv(t); }));
    add_vec(acc, o.b, dz);
    add_outer(acc, o.v, dz, cache.x);
    Eigen::VectorXd dx = s.v.transpose() * dz;
    if (s.skip_kind == SkipKind::linear) {
      add_outer(acc, o.a1, delta, cache.x);
      dx += s.skip.transpose() * delta;
    } else if (s.skip_kind == SkipKind::factored_linear) {
      const Eigen::VectorXd u = s.skip_a1 * cache.x;
      const Eigen::VectorXd a2t_delta = s.skip_a2.transpose() * delta;
      add_outer(acc, o.a2, delta, u);
      add_outer(acc, o.a1, a2t_delta, cache.x);
      dx += s.skip_a1.transpose() * a2t_delta;
    }
    if (j > 0) {
      if (arch.inner_activation == Activation::relu) {
        const Eigen::VectorXd& prev_out = caches[static_cast<std::size_t>(j) - 1].out;
        delta = dx.cwiseProduct(
            prev_out.unaryExpr([](double t) { return relu_deriv(t); }));
      } else {
        delta = dx;
      }
    }
  }
}

}  // namespace

double sq_loss(const NetworkParams& net, const Architecture& arch, const Dataset& data) {
  check_consistent(net, arch);
  check_data(arch, data);
  return block_sum(data.n(), [&](std::int64_t i) {
    Eigen::VectorXd h = data.X.row(i).transpose();
    for (int j = 0; j < arch.num_stacks; ++j) {
      h = stack_forward(net.stacks[static_cast<std::size_t>(j)], h);
      if (j + 1 < arch.num_stacks && arch.inner_activation == Activation::relu)
        h = h.unaryExpr([](double t) { return relu(t); });
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < h.size(); ++k) {
      const double r = h(k) - data.Y(i, k);
      s += data.weight(i, k) * r * r;
    }
    return s;
  });
}

double objective(const NetworkParams& net, const Architecture& arch, const Dataset& data,
                 double lambda) {
  return sq_loss(net, arch, data) + lambda * param_norm_sq(net);
}

Eigen::VectorXd gradient_flat(const NetworkParams& net, const Architecture& arch,
                              const Dataset& data, double lambda) {
  check_consistent(net, arch);
  check_data(arch, data);
  const std::vector<StackOffsets> offs = flat_layout(arch);
  Eigen::VectorXd grad =
      block_sum_vec(data.n(), param_count(arch), [&](std::int64_t i, Eigen::VectorXd& acc) {
        backward_sample(net, arch, data, i, offs, acc);
      });
  grad += 2.0 * lambda * pack(net);
  return grad;
}

NetworkParams gradient(const NetworkParams& net, const Architecture& arch,
                       const Dataset& data, double lambda) {
  return unpack(arch, gradient_flat(net, arch, data, lambda));
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed, double init_scale) {
  arch.validate();
  Rng rng(seed);
  NetworkParams net = zero_network(arch);
  auto fill = [&](Eigen::MatrixXd& m, int fan_in) {
    const double scale = init_scale / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-scale, scale);
  };
  for (int j = 0; j < arch.num_stacks; ++j) {
    StackParams& s = net.stacks[static_cast<std::size_t>(j)];
    const int dp = arch.dims[static_cast<std::size_t>(j)];
    const int n = arch.widths[static_cast<std::size_t>(j)];
    Eigen::MatrixXd bm = s.b, cm = s.c;
    fill(s.v, dp);
    fill(bm, dp);
    fill(s.w, n);
    fill(cm, n);
    s.b = bm;
    s.c = cm;
    if (s.skip_kind == SkipKind::linear) fill(s.skip, dp);
    if (s.skip_kind == SkipKind::factored_linear) {
      fill(s.skip_a1, dp);
      fill(s.skip_a2, static_cast<int>(s.skip_a1.rows()));
    }
  }
  return net;
}

namespace {

struct RestartResult {
  Eigen::VectorXd theta;
  std::vector<double> objective_trace;
  std::vector<double> grad_norm_trace;
  int gd_start_index = 0;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool diverged = false;
};

RestartResult run_restart(const Architecture& arch, const Dataset& data,
                          const TrainConfig& cfg, std::uint64_t restart_seed) {
  RestartResult res;
  Eigen::VectorXd theta = pack(init_params(arch, restart_seed, cfg.init_scale));
  auto eval = [&](const Eigen::VectorXd& t) {
    return objective(unpack(arch, t), arch, data, cfg.lambda);
  };
  auto grad = [&](const Eigen::VectorXd& t) {
    return gradient_flat(unpack(arch, t), arch, data, cfg.lambda);
  };

  // Warm phase: adaptive moments, fast escape from the small init. Keeps the
  // best iterate seen so the gd phase never starts above the init objective.
  Eigen::VectorXd best_theta = theta;
  double best_obj = eval(theta);
  if (cfg.optimizer == Optimizer::adam_then_gd && cfg.adam_iters > 0) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;
    for (int it = 0; it < cfg.adam_iters; ++it) {
      const Eigen::VectorXd g = grad(theta);
      b1t *= b1;
      b2t *= b2;
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      const Eigen::VectorXd mhat = m / (1.0 - b1t);
      const Eigen::VectorXd vhat = v / (1.0 - b2t);
      theta -= cfg.adam_lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
      const double obj = eval(theta);
      res.objective_trace.push_back(obj);
      res.grad_norm_trace.push_back(g.norm());
      if (!std::isfinite(obj)) {
        res.diverged = true;
        return res;
      }
      if (obj < best_obj) {
        best_obj = obj;
        best_theta = theta;
      }
    }
    theta = best_theta;
  }

  // Plain gradient descent with backtracking; monotone by construction.
  res.gd_start_index = static_cast<int>(res.objective_trace.size());
  double fcur = eval(theta);
  double step = cfg.gd_init_step;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd g = grad(theta);
    const double gnorm = g.norm();
    res.grad_norm_trace.push_back(gnorm);
    if (gnorm < cfg.grad_norm_tol) {
      res.objective_trace.push_back(fcur);
      res.converged = true;
      break;
    }
    const double gsq = gnorm * gnorm;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd trial = theta - step * g;
      const double ftrial = eval(trial);
      if (std::isfinite(ftrial) && ftrial <= fcur - 1e-4 * step * gsq) {
        theta = trial;
        fcur = ftrial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.objective_trace.push_back(fcur);
    if (!accepted) break;  // stalled at numerical precision
    step *= 2.0;
  }

  if (!std::isfinite(fcur)) {
    res.diverged = true;
    return res;
  }
  // Norm-minimal representative of the same function.
  NetworkParams balanced = balance(unpack(arch, theta));
  res.theta = pack(balanced);
  res.final_objective = objective(balanced, arch, data, cfg.lambda);
  return res;
}

}  // namespace

std::pair<NetworkParams, TrainReport> train(const Architecture& arch, const Dataset& data,
                                            const TrainConfig& cfg) {
  cfg.validate();
  check_data(arch, data);
  zero_network(arch);  // validates the architecture

  TrainReport report;
  for (int j = 0; j < arch.num_stacks; ++j) {
    const int w = arch.widths[static_cast<std::size_t>(j)];
    if (w <= data.n())
      report.warnings.push_back("stack " + std::to_string(j + 1) + " width " +
                                std::to_string(w) + " <= N=" + std::to_string(data.n()) +
                                "; the wide regime needs width > N");
  }

  std::vector<RestartResult> results(static_cast<std::size_t>(cfg.restarts));
  auto body = [&](std::int64_t r) {
    const std::uint64_t restart_seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(r);
    results[static_cast<std::size_t>(r)] = run_restart(arch, data, cfg, restart_seed);
  };
  if (cfg.parallel_restarts)
    parallel_for(cfg.restarts, body);
  else
    for (std::int64_t r = 0; r < cfg.restarts; ++r) body(r);

  int best = -1;
  for (int r = 0; r < cfg.restarts; ++r) {
    const RestartResult& res = results[static_cast<std::size_t>(r)];
    report.restart_objectives.push_back(res.diverged
                                            ? std::numeric_limits<double>::quiet_NaN()
                                            : res.final_objective);
    if (res.diverged) continue;
    if (best < 0 || res.final_objective < results[static_cast<std::size_t>(best)].final_objective)
      best = r;
  }
  if (best < 0) throw std::runtime_error("train: every restart diverged");

  const RestartResult& win = results[static_cast<std::size_t>(best)];
  NetworkParams net = unpack(arch, win.theta);
  report.final_objective = win.final_objective;
  report.final_loss = sq_loss(net, arch, data);
  report.final_param_norm_sq = param_norm_sq(net);
  report.final_network_cost = network_cost(net, arch, PenaltyKind::bias_reg);
  report.objective_trace = win.objective_trace;
  report.grad_norm_trace = win.grad_norm_trace;
  report.gd_start_index = win.gd_start_index;
  report.iterations = static_cast<int>(win.objective_trace.size());
  report.converged = win.converged;
  report.best_restart = best;
  return {std::move(net), std::move(report)};
}

void write_report_csv(const TrainReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "iter,phase,objective,grad_norm\n";
  for (std::size_t i = 0; i < report.objective_trace.size(); ++i) {
    const char* phase = static_cast<int>(i) < report.gd_start_index ? "adam" : "gd";
    const double gn = i < report.grad_norm_trace.size() ? report.grad_norm_trace[i] : 0.0;
    os << i << ',' << phase << ',' << format_double(report.objective_trace[i]) << ','
       << format_double(gn) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_report_summary(const TrainReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "{\n";
  os << "  \"final_objective\": " << format_double(report.final_objective) << ",\n";
  os << "  \"final_loss\": " << format_double(report.final_loss) << ",\n";
  os << "  \"final_param_norm_sq\": " << format_double(report.final_param_norm_sq) << ",\n";
  os << "  \"final_network_cost\": " << format_double(report.final_network_cost) << ",\n";
  os << "  \"iterations\": " << report.iterations << ",\n";
  os << "  \"converged\": " << (report.converged ? "true" : "false") << ",\n";
  os << "  \"best_restart\": " << report.best_restart << ",\n";
  os << "  \"restart_objectives\": [";
  for (std::size_t r = 0; r < report.restart_objectives.size(); ++r) {
    if (r) os << ", ";
    const double v = report.restart_objectives[r];
    if (std::isfinite(v))
      os << format_double(v);
    else
      os << "null";
  }
  os << "]\n}\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace stacknet
