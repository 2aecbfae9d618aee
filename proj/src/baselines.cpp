#include "stacknet/baselines.hpp"

#include <stdexcept>

#include "stacknet/kernels.hpp"
#include "stacknet/net.hpp"
#include "stacknet/rng.hpp"

namespace stacknet {

RandomFeatureModel fit_random_features(const Dataset& data, double lambda, int n,
                                       std::uint64_t seed) {
  data.validate();
  if (n < 1) throw std::invalid_argument("fit_random_features: need n >= 1");
  if (!(lambda > 0.0))
    throw std::invalid_argument("fit_random_features: lambda must be > 0");

  RandomFeatureModel model;
  model.lambda = lambda;
  model.seed = seed;
  Rng rng(seed);
  model.v.resize(n, data.d_in());
  model.b.resize(n);
  const double lo = data.X.minCoeff();
  const double hi = data.X.maxCoeff();
  for (int k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < data.d_in(); ++j) model.v(k, j) = rng.normal();
    // Kink placed inside the data range: b = -<v, xi> with xi on the range
    // diagonal keeps every feature active somewhere.
    const double xi = rng.uniform(lo, hi);
    model.b(k) = -model.v.row(k).sum() * xi;
  }

  Eigen::MatrixXd phi(data.n(), n + 1);
  parallel_for(data.n(), [&](std::int64_t i) {
    for (int k = 0; k < n; ++k)
      phi(i, k) = relu(model.v.row(k).dot(data.X.row(i)) + model.b(k));
    phi(i, n) = 1.0;
  });

  model.w.resize(data.d_out(), n);
  model.c.resize(data.d_out());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n + 1, n + 1);
  for (Eigen::Index k = 0; k < data.d_out(); ++k) {
    Eigen::MatrixXd phik = phi;
    Eigen::VectorXd yk = data.Y.col(k);
    if (data.has_mask()) {
      for (Eigen::Index i = 0; i < data.n(); ++i) {
        phik.row(i) *= data.mask(i, k);
        yk(i) *= data.mask(i, k);
      }
    }
    const Eigen::MatrixXd normal = phik.transpose() * phik + lambda * eye;
    const Eigen::VectorXd beta = normal.ldlt().solve(phik.transpose() * yk);
    model.w.row(k) = beta.head(n).transpose();
    model.c(k) = beta(n);
  }
  return model;
}

Eigen::VectorXd baseline_predict(const RandomFeatureModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd a = (model.v * x + model.b).unaryExpr([](double t) { return relu(t); });
  return model.w * a + model.c;
}

Eigen::MatrixXd baseline_predict_batch(const RandomFeatureModel& model,
                                       const Eigen::MatrixXd& xs) {
  Eigen::MatrixXd out(xs.rows(), model.w.rows());
  parallel_for(xs.rows(), [&](std::int64_t i) {
    out.row(i) = baseline_predict(model, xs.row(i).transpose()).transpose();
  });
  return out;
}

}  // namespace stacknet
