#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Core>

namespace lowdim {

/// Gauss-Legendre nodes/weights on [0, 1].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre_01(int n);

/// Gauss-Hermite nodes/weights for the N(0,1) weight (probabilists'
/// convention): sum_i w_i f(x_i) ≈ E[f(X)], X ~ N(0,1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite_prob(int n);

/// Deterministic standard-normal sampler (mt19937_64 + explicit Box-Muller);
/// identical streams across platforms for a given seed.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}
  double next();
  Eigen::VectorXd vector(int dim);

 private:
  double uniform01();
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class RuleKind { gauss_hermite_tensor, monte_carlo };

/// Weighted point set under the standard-normal reference.
struct ReferenceRule {
  RuleKind kind = RuleKind::gauss_hermite_tensor;
  int dim = 0;
  int gh_order = 0;
  int mc_m = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd points;   // one point per row
  Eigen::VectorXd weights;  // sums to 1

  static ReferenceRule gauss_hermite_tensor(int dim, int order);
  static ReferenceRule monte_carlo(int dim, int m, std::uint64_t seed);
  /// gauss-hermite-tensor(10) for dim <= 4, monte-carlo(5000, seed) above.
  static ReferenceRule default_rule(int dim, std::uint64_t seed = 20260823ULL);
};

}  // namespace lowdim
