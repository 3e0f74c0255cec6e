#include <lowdim/models.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <lowdim/quadrature.hpp>

namespace lowdim {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_1d(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

/// Precomputed Gaussian kernel: log N(resid; 0, cov) as a function of the
/// residual, factorized once.
struct MvnKernel {
  Eigen::MatrixXd L;
  double log_norm = 0.0;

  explicit MvnKernel(const Eigen::MatrixXd& cov) {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("MvnKernel: covariance not positive definite");
    L = llt.matrixL();
    log_norm = -0.5 * cov.rows() * kLog2Pi;
    for (int i = 0; i < cov.rows(); ++i) log_norm -= std::log(L(i, i));
  }

  double operator()(const Eigen::VectorXd& resid) const {
    return log_norm -
           0.5 * L.triangularView<Eigen::Lower>().solve(resid).squaredNorm();
  }
};

double log_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
               const Eigen::MatrixXd& cov) {
  return MvnKernel(cov)(x - mean);
}

}  // namespace

double banana_logdensity(const Eigen::Vector2d& z, double curvature) {
  const double r = z[1] - curvature * z[0] * z[0];
  return log_normal_1d(z[0], 0.0, 1.0) + log_normal_1d(r, 0.0, 0.25);
}

LogDensity banana_density(double curvature) {
  LogDensity d;
  d.dim = 2;
  d.eval = [curvature](const Eigen::VectorXd& z) {
    return banana_logdensity(Eigen::Vector2d(z[0], z[1]), curvature);
  };
  d.grad = [curvature](const Eigen::VectorXd& z) {
    const double r = z[1] - curvature * z[0] * z[0];
    Eigen::VectorXd g(2);
    g[0] = -z[0] + (r / 0.25) * 2.0 * curvature * z[0];
    g[1] = -r / 0.25;
    return g;
  };
  return d;
}

StateSpaceModel make_ssm(const LinearGaussianSSM& m) {
  StateSpaceModel s;
  s.state_dim = m.state_dim();
  s.obs_dim = m.obs_dim();
  s.param_dim = 0;
  const LinearGaussianSSM mm = m;
  const MvnKernel k0(m.Gamma0), kq(m.Q), kr(m.R);
  s.log_initial = [mm, k0](const Eigen::VectorXd& z0, const Eigen::VectorXd&) {
    return k0(z0 - mm.mu0);
  };
  s.log_transition = [mm, kq](const Eigen::VectorXd& z1, const Eigen::VectorXd& z0,
                              const Eigen::VectorXd&) {
    return kq(z1 - mm.F * z0);
  };
  s.log_likelihood = [mm, kr](const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                              const Eigen::VectorXd&) {
    return kr(y - mm.H * z);
  };
  s.log_param_prior = [](const Eigen::VectorXd&) { return 0.0; };
  return s;
}

double sv_phi_from_phistar(double phistar) {
  return 2.0 / (1.0 + std::exp(-phistar)) - 1.0;
}

double sv_log_transition(double z1, double z0, double mu, double phi,
                         const StochasticVolatilityModel& m) {
  return log_normal_1d(z1, mu + phi * (z0 - mu), m.q_var);
}

double sv_log_likelihood(double y, double z) {
  return log_normal_1d(y, 0.0, std::exp(z));
}

double sv_log_initial(double z0, double mu, double phi,
                      const StochasticVolatilityModel&) {
  if (std::abs(phi) >= 1.0) return -std::numeric_limits<double>::infinity();
  return log_normal_1d(z0, mu, 1.0 / (1.0 - phi * phi));
}

double sv_log_param_prior(double mu, double phistar,
                          const StochasticVolatilityModel& m) {
  return log_normal_1d(mu, m.mu_prior_mean, m.mu_prior_var) +
         log_normal_1d(phistar, m.phistar_prior_mean, m.phistar_prior_var);
}

StateSpaceModel make_sv_ssm(double mu, double phi,
                            const StochasticVolatilityModel& m) {
  StateSpaceModel s;
  s.state_dim = 1;
  s.obs_dim = 1;
  s.param_dim = 0;
  s.log_initial = [mu, phi, m](const Eigen::VectorXd& z0, const Eigen::VectorXd&) {
    return sv_log_initial(z0[0], mu, phi, m);
  };
  s.log_transition = [mu, phi, m](const Eigen::VectorXd& z1,
                                  const Eigen::VectorXd& z0,
                                  const Eigen::VectorXd&) {
    return sv_log_transition(z1[0], z0[0], mu, phi, m);
  };
  s.log_likelihood = [](const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                        const Eigen::VectorXd&) {
    return sv_log_likelihood(y[0], z[0]);
  };
  s.log_param_prior = [](const Eigen::VectorXd&) { return 0.0; };
  return s;
}

StateSpaceModel make_sv_joint_ssm(const StochasticVolatilityModel& m) {
  StateSpaceModel s;
  s.state_dim = 1;
  s.obs_dim = 1;
  s.param_dim = 2;
  s.log_initial = [m](const Eigen::VectorXd& z0, const Eigen::VectorXd& th) {
    return sv_log_initial(z0[0], th[0], sv_phi_from_phistar(th[1]), m);
  };
  s.log_transition = [m](const Eigen::VectorXd& z1, const Eigen::VectorXd& z0,
                         const Eigen::VectorXd& th) {
    return sv_log_transition(z1[0], z0[0], th[0], sv_phi_from_phistar(th[1]), m);
  };
  s.log_likelihood = [](const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                        const Eigen::VectorXd&) {
    return sv_log_likelihood(y[0], z[0]);
  };
  s.log_param_prior = [m](const Eigen::VectorXd& th) {
    return sv_log_param_prior(th[0], th[1], m);
  };
  return s;
}

UndirectedGraph sv_imap(int N) {
  if (N < 0) throw std::invalid_argument("sv_imap: N must be >= 0");
  UndirectedGraph g(N + 3);
  g.add_edge(1, 2);
  for (int k = 0; k <= N; ++k) {
    g.add_edge(1, k + 3);
    g.add_edge(2, k + 3);
    if (k > 0) g.add_edge(k + 2, k + 3);
  }
  return g;
}

SimulatedPath simulate(const LinearGaussianSSM& model, int steps,
                       std::uint64_t seed) {
  const int n = model.state_dim();
  const int d = model.obs_dim();
  NormalSampler s(seed);
  const Eigen::MatrixXd L0 =
      Eigen::LLT<Eigen::MatrixXd>(model.Gamma0).matrixL();
  const Eigen::MatrixXd LQ = Eigen::LLT<Eigen::MatrixXd>(model.Q).matrixL();
  const Eigen::MatrixXd LR = Eigen::LLT<Eigen::MatrixXd>(model.R).matrixL();
  SimulatedPath out;
  out.states.resize(steps + 1, n);
  out.observations.resize(steps + 1, d);
  Eigen::VectorXd z = model.mu0 + L0 * s.vector(n);
  for (int k = 0; k <= steps; ++k) {
    out.states.row(k) = z.transpose();
    out.observations.row(k) = (model.H * z + LR * s.vector(d)).transpose();
    if (k < steps) z = model.F * z + LQ * s.vector(n);
  }
  out.theta.resize(0);
  return out;
}

SimulatedPath simulate_sv(double mu, double phi, int steps, std::uint64_t seed,
                          const StochasticVolatilityModel& m) {
  if (std::abs(phi) >= 1.0)
    throw std::invalid_argument("simulate_sv: |phi| must be < 1");
  NormalSampler s(seed);
  SimulatedPath out;
  out.states.resize(steps + 1, 1);
  out.observations.resize(steps + 1, 1);
  double z = mu + std::sqrt(1.0 / (1.0 - phi * phi)) * s.next();
  const double sq = std::sqrt(m.q_var);
  for (int k = 0; k <= steps; ++k) {
    out.states(k, 0) = z;
    out.observations(k, 0) = std::exp(0.5 * z) * s.next();
    if (k < steps) z = mu + phi * (z - mu) + sq * s.next();
  }
  out.theta.resize(2);
  out.theta << mu, phi;
  return out;
}

KalmanResult kalman_rts_oracle(const LinearGaussianSSM& model,
                               const Eigen::MatrixXd& observations) {
  const int n = model.state_dim();
  const int N = static_cast<int>(observations.rows()) - 1;
  if (N < 0) throw std::invalid_argument("kalman_rts_oracle: no observations");
  KalmanResult res;
  res.step_loglik.resize(N + 1);

  // filter (covariance form), observation at every time index including 0
  std::vector<Eigen::VectorXd> pred_mean(N + 1);
  std::vector<Eigen::MatrixXd> pred_cov(N + 1);
  Eigen::VectorXd m = model.mu0;
  Eigen::MatrixXd P = model.Gamma0;
  for (int k = 0; k <= N; ++k) {
    if (k > 0) {
      m = model.F * m;
      P = model.F * P * model.F.transpose() + model.Q;
    }
    pred_mean[k] = m;
    pred_cov[k] = P;
    const Eigen::VectorXd y = observations.row(k).transpose();
    const Eigen::VectorXd innov = y - model.H * m;
    const Eigen::MatrixXd S = model.H * P * model.H.transpose() + model.R;
    res.step_loglik[k] = log_mvn(y, model.H * m, S);
    const Eigen::MatrixXd K = P * model.H.transpose() * S.inverse();
    m = m + K * innov;
    P = P - K * model.H * P;
    P = 0.5 * (P + P.transpose());
    res.filter_mean.push_back(m);
    res.filter_cov.push_back(P);
  }
  res.loglik = res.step_loglik.sum();

  // RTS smoother
  res.smooth_mean.assign(N + 1, Eigen::VectorXd());
  res.smooth_cov.assign(N + 1, Eigen::MatrixXd());
  res.smooth_mean[N] = res.filter_mean[N];
  res.smooth_cov[N] = res.filter_cov[N];
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd G = res.filter_cov[k] * model.F.transpose() *
                              pred_cov[k + 1].inverse();
    res.smooth_mean[k] =
        res.filter_mean[k] + G * (res.smooth_mean[k + 1] - pred_mean[k + 1]);
    res.smooth_cov[k] =
        res.filter_cov[k] +
        G * (res.smooth_cov[k + 1] - pred_cov[k + 1]) * G.transpose();
  }

  // lag-1 joints: (z_k, z_{k+1}) | y_{0..k+1}
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd& mk = res.filter_mean[k];
    const Eigen::MatrixXd& Pk = res.filter_cov[k];
    Eigen::VectorXd jm(2 * n);
    jm << mk, model.F * mk;
    Eigen::MatrixXd jc(2 * n, 2 * n);
    const Eigen::MatrixXd cross = Pk * model.F.transpose();
    jc.topLeftCorner(n, n) = Pk;
    jc.topRightCorner(n, n) = cross;
    jc.bottomLeftCorner(n, n) = cross.transpose();
    jc.bottomRightCorner(n, n) = model.F * cross + model.Q;
    // condition on y_{k+1} = H z_{k+1} + e
    Eigen::MatrixXd Cxy(2 * n, model.obs_dim());
    Cxy.topRows(n) = cross * model.H.transpose();
    Cxy.bottomRows(n) = jc.bottomRightCorner(n, n) * model.H.transpose();
    const Eigen::MatrixXd S =
        model.H * jc.bottomRightCorner(n, n) * model.H.transpose() + model.R;
    const Eigen::VectorXd innov =
        observations.row(k + 1).transpose() - model.H * jm.tail(n);
    const Eigen::MatrixXd K = Cxy * S.inverse();
    jm += K * innov;
    jc -= K * Cxy.transpose();
    res.lag1_mean.push_back(jm);
    res.lag1_cov.push_back(0.5 * (jc + jc.transpose()));
  }

  // fixed-point marginals: z_0 | y_{0..k} via joint (z_0, z_k) filtering
  {
    Eigen::VectorXd jm(2 * n);
    jm << model.mu0, model.mu0;
    Eigen::MatrixXd jc(2 * n, 2 * n);
    jc << model.Gamma0, model.Gamma0, model.Gamma0, model.Gamma0;
    for (int k = 0; k <= N; ++k) {
      if (k > 0) {
        Eigen::VectorXd pm(2 * n);
        pm << jm.head(n), model.F * jm.tail(n);
        Eigen::MatrixXd pc(2 * n, 2 * n);
        pc.topLeftCorner(n, n) = jc.topLeftCorner(n, n);
        pc.topRightCorner(n, n) = jc.topRightCorner(n, n) * model.F.transpose();
        pc.bottomLeftCorner(n, n) = pc.topRightCorner(n, n).transpose();
        pc.bottomRightCorner(n, n) =
            model.F * jc.bottomRightCorner(n, n) * model.F.transpose() + model.Q;
        jm = pm;
        jc = pc;
      }
      Eigen::MatrixXd Cxy(2 * n, model.obs_dim());
      Cxy.topRows(n) = jc.topRightCorner(n, n) * model.H.transpose();
      Cxy.bottomRows(n) = jc.bottomRightCorner(n, n) * model.H.transpose();
      const Eigen::MatrixXd S =
          model.H * jc.bottomRightCorner(n, n) * model.H.transpose() + model.R;
      const Eigen::VectorXd innov =
          observations.row(k).transpose() - model.H * jm.tail(n);
      const Eigen::MatrixXd K = Cxy * S.inverse();
      jm += K * innov;
      jc -= K * Cxy.transpose();
      jc = 0.5 * (jc + jc.transpose()).eval();
      res.z0_mean.push_back(jm.head(n));
      res.z0_cov.push_back(jc.topLeftCorner(n, n));
    }
  }
  return res;
}

}  // namespace lowdim
