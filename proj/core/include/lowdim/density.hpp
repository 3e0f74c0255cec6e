#pragma once

#include <functional>

#include <Eigen/Core>

namespace lowdim {

/// Unnormalized log-density with optional analytic gradient.  When no gradient
/// is supplied, gradient() falls back to central finite differences.
struct LogDensity {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> eval;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // optional

  double operator()(const Eigen::VectorXd& x) const { return eval(x); }
  bool has_grad() const { return static_cast<bool>(grad); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
};

/// log N(x; 0, I_dim) including the normalizing constant.
double log_std_normal(const Eigen::VectorXd& x);

LogDensity standard_normal_density(int dim);
LogDensity gaussian_density(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

}  // namespace lowdim
