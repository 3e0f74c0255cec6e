#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include <lowdim/density.hpp>
#include <lowdim/graph.hpp>

namespace lowdim {

/// General state-space model interface.  theta is empty when param_dim == 0.
struct StateSpaceModel {
  int state_dim = 0;
  int obs_dim = 0;
  int param_dim = 0;
  std::function<double(const Eigen::VectorXd& z0, const Eigen::VectorXd& theta)>
      log_initial;
  std::function<double(const Eigen::VectorXd& z1, const Eigen::VectorXd& z0,
                       const Eigen::VectorXd& theta)>
      log_transition;
  std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& theta)>
      log_likelihood;
  std::function<double(const Eigen::VectorXd& theta)> log_param_prior;
};

double banana_logdensity(const Eigen::Vector2d& z, double curvature = 1.0);
LogDensity banana_density(double curvature = 1.0);

/// z_{k+1} = F z_k + eps, eps ~ N(0, Q); y_k = H z_k + e, e ~ N(0, R);
/// z_0 ~ N(mu0, Gamma0).
struct LinearGaussianSSM {
  Eigen::MatrixXd F, Q, H, R;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd Gamma0;
  int state_dim() const { return static_cast<int>(F.rows()); }
  int obs_dim() const { return static_cast<int>(H.rows()); }
};

StateSpaceModel make_ssm(const LinearGaussianSSM& m);

/// Stochastic volatility: Z_{k+1} = mu + phi (Z_k - mu) + eps, eps ~ N(0,1/16);
/// Z_0 | mu,phi ~ N(mu, 1/(1-phi^2)); Y_k | Z_k ~ N(0, exp(Z_k)).
/// Hyperpriors mu ~ N(0,1), phi = 2 expit(phi*) - 1 with phi* ~ N(3,1).
struct StochasticVolatilityModel {
  double q_var = 1.0 / 16.0;
  double mu_prior_mean = 0.0, mu_prior_var = 1.0;
  double phistar_prior_mean = 3.0, phistar_prior_var = 1.0;
};

double sv_phi_from_phistar(double phistar);
double sv_log_transition(double z1, double z0, double mu, double phi,
                         const StochasticVolatilityModel& m = {});
double sv_log_likelihood(double y, double z);
double sv_log_initial(double z0, double mu, double phi,
                      const StochasticVolatilityModel& m = {});
/// Prior over theta = (mu, phi*) in unconstrained space.
double sv_log_param_prior(double mu, double phistar,
                          const StochasticVolatilityModel& m = {});

/// Fixed hyperparameters (param_dim = 0).
StateSpaceModel make_sv_ssm(double mu, double phi,
                            const StochasticVolatilityModel& m = {});
/// Joint inference over theta = (mu, phi*) (param_dim = 2).
StateSpaceModel make_sv_joint_ssm(const StochasticVolatilityModel& m = {});

/// Minimal I-map of the joint SV posterior with ordering (mu, phi, Z_0..Z_N):
/// vertex 1 = mu, 2 = phi, 2+k+1 = Z_k.
UndirectedGraph sv_imap(int N);

struct SimulatedPath {
  Eigen::MatrixXd states;        // (steps+1) x n
  Eigen::MatrixXd observations;  // (steps+1) x d
  Eigen::VectorXd theta;         // drawn or given parameters
};

/// Ancestral sampling with fixed theta; deterministic under seed.  Only
/// implemented for models built by the constructors in this header (the
/// generic StateSpaceModel interface carries densities, not samplers).
SimulatedPath simulate(const LinearGaussianSSM& model, int steps, std::uint64_t seed);
SimulatedPath simulate_sv(double mu, double phi, int steps, std::uint64_t seed,
                          const StochasticVolatilityModel& m = {});

struct KalmanResult {
  std::vector<Eigen::VectorXd> filter_mean;     // time k | y_{0..k}
  std::vector<Eigen::MatrixXd> filter_cov;
  std::vector<Eigen::VectorXd> smooth_mean;     // time k | y_{0..N}
  std::vector<Eigen::MatrixXd> smooth_cov;
  /// lag1_mean[k]/lag1_cov[k]: joint of (z_k, z_{k+1}) | y_{0..k+1}.
  std::vector<Eigen::VectorXd> lag1_mean;
  std::vector<Eigen::MatrixXd> lag1_cov;
  /// marginal of z_0 given y_{0..k} for each k (fixed-point smoother oracle)
  std::vector<Eigen::VectorXd> z0_mean;
  std::vector<Eigen::MatrixXd> z0_cov;
  Eigen::VectorXd step_loglik;  // log p(y_0), log p(y_1|y_0), ...
  double loglik = 0.0;          // prediction-error decomposition total
};

/// Independent covariance-form Kalman filter + RTS smoother oracle.
KalmanResult kalman_rts_oracle(const LinearGaussianSSM& model,
                               const Eigen::MatrixXd& observations);

}  // namespace lowdim
