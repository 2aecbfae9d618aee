#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stacknet {

// Execution mode for the data-parallel kernels. Both modes produce bitwise
// identical results: parallel loops write disjoint outputs, and reductions
// combine fixed-size blocks in index order, so the rounding sequence does
// not depend on the thread count.
enum class ExecMode { serial, openmp };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);
bool openmp_available();
int num_threads();

namespace detail {
// Block length for deterministic reductions. Fixed, never derived from the
// thread count.
inline constexpr std::int64_t reduce_block = 256;
inline constexpr std::int64_t parallel_grain = 4;
}  // namespace detail

template <class Body>
void parallel_for(std::int64_t n, Body&& body) {
#ifdef _OPENMP
  if (exec_mode() == ExecMode::openmp && n >= detail::parallel_grain) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Deterministic sum of term(0) + ... + term(n-1). Terms are accumulated
// serially inside fixed blocks; block partials are added in index order.
template <class Term>
double block_sum(std::int64_t n, Term&& term) {
  const std::int64_t nb = (n + detail::reduce_block - 1) / detail::reduce_block;
  if (nb <= 1) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += term(i);
    return s;
  }
  std::vector<double> partial(static_cast<std::size_t>(nb), 0.0);
  parallel_for(nb, [&](std::int64_t b) {
    const std::int64_t lo = b * detail::reduce_block;
    const std::int64_t hi = std::min(n, lo + detail::reduce_block);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Deterministic accumulation of dim-dimensional terms. accum(i, acc) must
// add term i into acc. Same blocked order as block_sum.
template <class Accum>
Eigen::VectorXd block_sum_vec(std::int64_t n, Eigen::Index dim, Accum&& accum) {
  const std::int64_t nb = (n + detail::reduce_block - 1) / detail::reduce_block;
  if (nb <= 1) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (std::int64_t i = 0; i < n; ++i) accum(i, acc);
    return acc;
  }
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(dim, nb);
  parallel_for(nb, [&](std::int64_t b) {
    const std::int64_t lo = b * detail::reduce_block;
    const std::int64_t hi = std::min(n, lo + detail::reduce_block);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (std::int64_t i = lo; i < hi; ++i) accum(i, acc);
    partial.col(b) = acc;
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  for (std::int64_t b = 0; b < nb; ++b) total += partial.col(b);
  return total;
}

// out = Phi * W + ones * c^T, row-parallel. Phi is N x G, W is G x d.
Eigen::MatrixXd design_apply(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& c);

// Phi^T * r, parallel over the G rows of the result.
Eigen::MatrixXd design_adjoint(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& r);

}  // namespace stacknet
