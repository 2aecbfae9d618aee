#include "stacknet/kernels.hpp"

#include <atomic>

namespace stacknet {

namespace {
std::atomic<ExecMode> g_mode{
#ifdef _OPENMP
    ExecMode::openmp
#else
    ExecMode::serial
#endif
};
}  // namespace

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }

void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int num_threads() {
#ifdef _OPENMP
  return exec_mode() == ExecMode::openmp ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

Eigen::MatrixXd design_apply(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& c) {
  const Eigen::Index n = phi.rows();
  Eigen::MatrixXd out(n, w.cols());
  parallel_for(n, [&](std::int64_t i) { out.row(i) = phi.row(i) * w + c.transpose(); });
  return out;
}

Eigen::MatrixXd design_adjoint(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& r) {
  const Eigen::Index g = phi.cols();
  Eigen::MatrixXd out(g, r.cols());
  parallel_for(g, [&](std::int64_t j) { out.row(j) = phi.col(j).transpose() * r; });
  return out;
}

}  // namespace stacknet
