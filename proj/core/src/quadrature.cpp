#include <lowdim/quadrature.hpp>

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lowdim {

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre_01(int n) {
  // nodes/weights on [-1,1] by Newton on the Legendre recurrence, then mapped
  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * pp * pp);
  }
  Eigen::VectorXd xs = (x.array() + 1.0) * 0.5;
  Eigen::VectorXd ws = w * 0.5;
  return {xs.reverse(), ws.reverse()};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite_prob(int n) {
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite_prob: eigensolver failure");
  Eigen::VectorXd nodes = es.eigenvalues();
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;
  }
  return {nodes, weights};
}

double NormalSampler::uniform01() {
  // 53-bit mantissa uniform in (0,1)
  return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double NormalSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd NormalSampler::vector(int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = next();
  return v;
}

ReferenceRule ReferenceRule::gauss_hermite_tensor(int dim, int order) {
  if (dim < 1 || order < 1)
    throw std::invalid_argument("gauss_hermite_tensor: bad dim/order");
  auto [x1, w1] = gauss_hermite_prob(order);
  long total = 1;
  for (int i = 0; i < dim; ++i) {
    total *= order;
    if (total > 20000000L)
      throw std::invalid_argument("gauss_hermite_tensor: grid too large");
  }
  ReferenceRule r;
  r.kind = RuleKind::gauss_hermite_tensor;
  r.dim = dim;
  r.gh_order = order;
  r.points.resize(total, dim);
  r.weights.resize(total);
  std::vector<int> idx(dim, 0);
  for (long p = 0; p < total; ++p) {
    double w = 1.0;
    for (int j = 0; j < dim; ++j) {
      r.points(p, j) = x1[idx[j]];
      w *= w1[idx[j]];
    }
    r.weights[p] = w;
    for (int j = dim - 1; j >= 0; --j) {
      if (++idx[j] < order) break;
      idx[j] = 0;
    }
  }
  return r;
}

ReferenceRule ReferenceRule::monte_carlo(int dim, int m, std::uint64_t seed) {
  if (dim < 1 || m < 1) throw std::invalid_argument("monte_carlo: bad dim/m");
  ReferenceRule r;
  r.kind = RuleKind::monte_carlo;
  r.dim = dim;
  r.mc_m = m;
  r.seed = seed;
  r.points.resize(m, dim);
  r.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  NormalSampler s(seed);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < dim; ++j) r.points(i, j) = s.next();
  return r;
}

ReferenceRule ReferenceRule::default_rule(int dim, std::uint64_t seed) {
  if (dim <= 4) return gauss_hermite_tensor(dim, 10);
  return monte_carlo(dim, 5000, seed);
}

}  // namespace lowdim
