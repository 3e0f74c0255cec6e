#include <lowdim/density.hpp>

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace lowdim {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Eigen::VectorXd LogDensity::gradient(const Eigen::VectorXd& x) const {
  if (grad) return grad(x);
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (eval(xp) - eval(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

double log_std_normal(const Eigen::VectorXd& x) {
  return -0.5 * x.squaredNorm() - 0.5 * kLog2Pi * static_cast<double>(x.size());
}

LogDensity standard_normal_density(int dim) {
  LogDensity d;
  d.dim = dim;
  d.eval = [](const Eigen::VectorXd& x) { return log_std_normal(x); };
  d.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  return d;
}

LogDensity gaussian_density(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(mean.size());
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_density: covariance not SPD");
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double c = -0.5 * (n * kLog2Pi + logdet);
  LogDensity d;
  d.dim = n;
  d.eval = [mean, prec, c](const Eigen::VectorXd& x) {
    Eigen::VectorXd r = x - mean;
    return c - 0.5 * r.dot(prec * r);
  };
  d.grad = [mean, prec](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-(prec * (x - mean)));
  };
  return d;
}

}  // namespace lowdim
