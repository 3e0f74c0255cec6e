#include <lowdim/sequential.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <json.hpp>

#include <lowdim/quadrature.hpp>

namespace lowdim {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
               const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_mvn: covariance not positive definite");
  const Eigen::VectorXd s = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (int i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * (x.size() * kLog2Pi + s.squaredNorm()) - logdet;
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_sqrt: eigensolver failure");
  Eigen::VectorXd d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d[i] = std::sqrt(std::max(d[i], 0.0));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_inv_sqrt: eigensolver failure");
  Eigen::VectorXd d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d[i] = 1.0 / std::sqrt(d[i]);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// sigma for the step-map template: theta first, then the x_{i+1} block, then
/// the x_i block (ambient layout theta 1..p, x_i p+1..p+n, x_{i+1} p+n+1..p+2n).
std::vector<int> step_perm(int n, int p) {
  std::vector<int> perm;
  for (int k = 1; k <= p; ++k) perm.push_back(k);
  for (int k = p + n + 1; k <= p + 2 * n; ++k) perm.push_back(k);
  for (int k = p + 1; k <= p + n; ++k) perm.push_back(k);
  return perm;
}

/// Exact p'-dim triangular map from the leading p' components of a step map.
MonotoneTriangularMap extract_prefix(const MonotoneTriangularMap& m, int p) {
  MonotoneTriangularMap out;
  out.dim = p;
  out.perm.assign(m.perm.begin(), m.perm.begin() + p);
  out.rectifier = m.rectifier;
  out.eps = m.eps;
  out.offdiag_family = m.offdiag_family;
  out.diag_family = m.diag_family;
  out.comps.assign(m.comps.begin(), m.comps.begin() + p);
  return out;
}

std::string optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::newton_cg ? "newton-cg" : "bfgs";
}

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "newton-cg") return OptimizerKind::newton_cg;
  if (s == "bfgs") return OptimizerKind::bfgs;
  throw std::invalid_argument("unknown optimizer: " + s);
}

std::string mode_name(SmootherMode m) {
  switch (m) {
    case SmootherMode::plain: return "plain";
    case SmootherMode::with_params: return "with-params";
    case SmootherMode::fixed_point: return "fixed-point";
  }
  throw std::logic_error("mode_name");
}

SmootherMode mode_from_name(const std::string& s) {
  if (s == "plain") return SmootherMode::plain;
  if (s == "with-params") return SmootherMode::with_params;
  if (s == "fixed-point") return SmootherMode::fixed_point;
  throw std::invalid_argument("unknown smoother mode: " + s);
}

}  // namespace

Eigen::VectorXd StepMap::m_theta(const Eigen::VectorXd& theta) const {
  if (p == 0) return Eigen::VectorXd();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p + 2 * n);
  x.head(p) = theta;
  Eigen::VectorXd out(p);
  for (int k = 0; k < p; ++k) out[k] = tri->component_value(k, x);
  return out;
}

Eigen::VectorXd StepMap::m0(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x_cur,
                            const Eigen::VectorXd& x_next) const {
  if (is_affine()) return affine->A * x_cur + affine->B * x_next + affine->a;
  Eigen::VectorXd x(p + 2 * n);
  x.head(p) = theta;
  x.segment(p, n) = x_cur;
  x.tail(n) = x_next;
  // sigma visits theta, then the x_{i+1} block, then the x_i block
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = tri->component_value(p + n + k, x);
  return out;
}

Eigen::VectorXd StepMap::m1(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x_next) const {
  if (is_affine()) return affine->C * x_next + affine->c;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p + 2 * n);
  x.head(p) = theta;
  x.tail(n) = x_next;
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = tri->component_value(p + k, x);
  return out;
}

LogDensity step_target(const SmootherState& state, const StateSpaceModel& model,
                       const Eigen::MatrixXd& obs, int i) {
  const int n = state.n, p = state.p;
  if (i < 0 || i + 1 >= obs.rows())
    throw std::invalid_argument("step_target: index out of range");
  LogDensity d;
  d.dim = p + 2 * n;
  if (i == 0) {
    const Eigen::VectorXd y0 = obs.row(0).transpose();
    const Eigen::VectorXd y1 = obs.row(1).transpose();
    d.eval = [model, n, p, y0, y1](const Eigen::VectorXd& x) {
      const Eigen::VectorXd th = x.head(p);
      const Eigen::VectorXd z0 = x.segment(p, n);
      const Eigen::VectorXd z1 = x.tail(n);
      return model.log_param_prior(th) + model.log_initial(z0, th) +
             model.log_transition(z1, z0, th) + model.log_likelihood(y0, z0, th) +
             model.log_likelihood(y1, z1, th);
    };
    return d;
  }
  if (i > state.num_steps())
    throw std::invalid_argument("step_target: previous step map missing");
  const StepMap prev = state.steps[i - 1];
  std::optional<MonotoneTriangularMap> t_prev;
  if (p > 0) t_prev = state.t_theta.at(i - 1);
  const Eigen::VectorXd y_next = obs.row(i + 1).transpose();
  d.eval = [model, n, p, y_next, prev, t_prev](const Eigen::VectorXd& x) {
    const Eigen::VectorXd xth = x.head(p);
    const Eigen::VectorXd xi = x.segment(p, n);
    const Eigen::VectorXd z_next = x.tail(n);
    const Eigen::VectorXd th = p > 0 ? t_prev->evaluate(xth) : Eigen::VectorXd();
    const Eigen::VectorXd zi = prev.m1(xth, xi);
    double eta = -0.5 * (p + n) * kLog2Pi -
                 0.5 * (xth.squaredNorm() + xi.squaredNorm());
    return eta + model.log_transition(z_next, zi, th) +
           model.log_likelihood(y_next, z_next, th);
  };
  // chain-rule gradient: model terms by cheap central differences, map blocks
  // by analytic Jacobians (keeps the cost at O(1) map evaluations per call)
  d.grad = [model, n, p, y_next, prev, t_prev](const Eigen::VectorXd& x) {
    const Eigen::VectorXd xth = x.head(p);
    const Eigen::VectorXd xi = x.segment(p, n);
    const Eigen::VectorXd z_next = x.tail(n);
    const Eigen::VectorXd th = p > 0 ? t_prev->evaluate(xth) : Eigen::VectorXd();
    const Eigen::VectorXd zi = prev.m1(xth, xi);

    auto fd = [](const std::function<double(const Eigen::VectorXd&)>& f,
                 const Eigen::VectorXd& u) {
      Eigen::VectorXd g(u.size());
      Eigen::VectorXd up = u;
      for (int j = 0; j < u.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
        up[j] = u[j] + h;
        const double fp = f(up);
        up[j] = u[j] - h;
        const double fm = f(up);
        up[j] = u[j];
        g[j] = (fp - fm) / (2.0 * h);
      }
      return g;
    };
    const Eigen::VectorXd g_lt_z1 =
        fd([&](const Eigen::VectorXd& u) { return model.log_transition(u, zi, th); },
           z_next);
    const Eigen::VectorXd g_lt_z0 =
        fd([&](const Eigen::VectorXd& u) { return model.log_transition(z_next, u, th); },
           zi);
    const Eigen::VectorXd g_ll_z =
        fd([&](const Eigen::VectorXd& u) { return model.log_likelihood(y_next, u, th); },
           z_next);

    Eigen::VectorXd g(p + 2 * n);
    g.tail(n) = g_lt_z1 + g_ll_z;
    if (prev.is_affine()) {
      g.segment(p, n) = -xi + prev.affine->C.transpose() * g_lt_z0;
    } else {
      Eigen::VectorXd xfull = Eigen::VectorXd::Zero(p + 2 * n);
      xfull.head(p) = xth;
      xfull.tail(n) = xi;
      const Eigen::MatrixXd Jm1 =
          prev.tri->jacobian(xfull).bottomRows(n);  // rows: z_i block
      g.segment(p, n) = -xi + Jm1.rightCols(n).transpose() * g_lt_z0;
      if (p > 0) {
        const Eigen::VectorXd g_lt_th = fd(
            [&](const Eigen::VectorXd& u) { return model.log_transition(z_next, zi, u); },
            th);
        const Eigen::VectorXd g_ll_th = fd(
            [&](const Eigen::VectorXd& u) { return model.log_likelihood(y_next, z_next, u); },
            th);
        const Eigen::MatrixXd Jth = t_prev->jacobian(xth);
        g.head(p) = -xth + Jth.transpose() * (g_lt_th + g_ll_th) +
                    Jm1.leftCols(p).transpose() * g_lt_z0;
      }
    }
    return g;
  };
  return d;
}

namespace {

ReferenceRule fit_rule(int dim, const TemplateConfig& config) {
  if (dim <= 4) return ReferenceRule::gauss_hermite_tensor(dim, config.gh_order);
  return ReferenceRule::monte_carlo(dim, config.mc_m, config.seed);
}

}  // namespace

SmootherState assimilate(const StateSpaceModel& model, const Eigen::MatrixXd& obs,
                         const TemplateConfig& config,
                         const SmootherState* resume) {
  const int n = model.state_dim, p = model.param_dim;
  const int total_steps = static_cast<int>(obs.rows()) - 1;
  if (total_steps < 1)
    throw std::invalid_argument("assimilate: need at least two observation rows");
  SmootherState state;
  if (resume) {
    if (resume->n != n || resume->p != p)
      throw std::invalid_argument("assimilate: resume state dimension mismatch");
    state = *resume;
  } else {
    state.mode = p > 0 ? SmootherMode::with_params : SmootherMode::plain;
    state.n = n;
    state.p = p;
    state.config = config;
    std::ostringstream hs;
    hs << "p" << p << "n" << n;
    state.model_hash = hs.str();
  }
  const int dim = p + 2 * n;
  const ReferenceRule rule = fit_rule(dim, config);
  const MonotoneTriangularMap tmpl = make_template(
      dim, step_perm(n, p), config.degree, {}, config.rectifier);
  MonotoneTriangularMap tmpl_theta;
  if (p > 0)
    tmpl_theta = make_template(p, Ordering::identity(p).perm, config.degree, {},
                               config.rectifier);
  for (int i = state.num_steps(); i < total_steps; ++i) {
    const LogDensity target = step_target(state, model, obs, i);
    MonotoneTriangularMap init = tmpl;
    if (i > 0 && !state.steps[i - 1].is_affine() &&
        init.structurally_equal(*state.steps[i - 1].tri))
      init.set_coefficients(state.steps[i - 1].tri->coefficients());
    auto [fitted, report] = compute_map(target, init, rule, config.fit);
    StepMap sm;
    sm.n = n;
    sm.p = p;
    sm.tri = std::move(fitted);
    sm.log_c = report.log_normalizing_constant;
    sm.variance_diag = report.variance_diagnostic;
    state.steps.push_back(std::move(sm));
    if (p > 0) {
      const MonotoneTriangularMap mtheta =
          extract_prefix(*state.steps.back().tri, p);
      if (i == 0) {
        state.t_theta.push_back(mtheta);
      } else {
        const MonotoneTriangularMap t_prev = state.t_theta.back();
        auto target_fn = [&t_prev, &mtheta](const Eigen::VectorXd& x) {
          return t_prev.evaluate(mtheta.evaluate(x));
        };
        const ReferenceRule reg_rule = ReferenceRule::monte_carlo(
            p, config.regression_points, config.seed + 7919ULL * (i + 1));
        MonotoneTriangularMap reg_init = tmpl_theta;
        if (reg_init.structurally_equal(state.t_theta.back()))
          reg_init.set_coefficients(state.t_theta.back().coefficients());
        state.t_theta.push_back(
            regress_map(target_fn, reg_init, reg_rule, config.fit));
      }
    }
  }
  return state;
}

StepMap linear_gaussian_step(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                             Eigen::VectorXd& c_prev, Eigen::MatrixXd& C_prev,
                             const Eigen::VectorXd& y_next) {
  const int n = static_cast<int>(F.rows());
  const Eigen::MatrixXd Qi = Q.inverse();
  const Eigen::MatrixXd FC = F * C_prev;
  const Eigen::MatrixXd J =
      Eigen::MatrixXd::Identity(n, n) + FC.transpose() * Qi * FC;
  const Eigen::MatrixXd Ji = J.inverse();

  // square-root Kalman update to time k+1
  const Eigen::VectorXd mp = F * c_prev;
  const Eigen::MatrixXd Pp = FC * FC.transpose() + Q;
  const Eigen::MatrixXd S = H * Pp * H.transpose() + R;
  const Eigen::MatrixXd K = Pp * H.transpose() * S.inverse();
  const Eigen::VectorXd c_new = mp + K * (y_next - H * mp);
  Eigen::MatrixXd P_new = Pp - K * H * Pp;
  P_new = 0.5 * (P_new + P_new.transpose()).eval();
  const Eigen::MatrixXd C_new = sym_sqrt(P_new);

  AffineStepMap am;
  am.A = sym_inv_sqrt(J);
  am.B = Ji * FC.transpose() * Qi * C_new;
  am.a = Ji * FC.transpose() * Qi * (c_new - mp);
  am.C = C_new;
  am.c = c_new;

  StepMap sm;
  sm.n = n;
  sm.p = 0;
  sm.affine = std::move(am);
  sm.log_c = log_mvn(y_next, H * mp, S);
  sm.variance_diag = 0.0;
  c_prev = c_new;
  C_prev = C_new;
  return sm;
}

SmootherState assimilate_closed_form(const LinearGaussianSSM& model,
                                     const Eigen::MatrixXd& obs,
                                     const SmootherState* resume) {
  const int n = model.state_dim();
  const int total_steps = static_cast<int>(obs.rows()) - 1;
  if (total_steps < 1)
    throw std::invalid_argument(
        "assimilate_closed_form: need at least two observation rows");
  SmootherState state;
  if (resume) {
    if (resume->n != n || resume->p != 0 || resume->steps.empty() ||
        !resume->steps.back().is_affine())
      throw std::invalid_argument("assimilate_closed_form: bad resume state");
    state = *resume;
  } else {
    state.mode = SmootherMode::plain;
    state.n = n;
    state.p = 0;
    std::ostringstream hs;
    hs << "p0n" << n << "lg";
    state.model_hash = hs.str();
  }

  Eigen::VectorXd c_prev;
  Eigen::MatrixXd C_prev;
  int start = state.num_steps();
  if (start == 0) {
    // initial step: joint of (z_0, z_1) conditioned on y_0 then y_1
    const Eigen::VectorXd y0 = obs.row(0).transpose();
    const Eigen::VectorXd y1 = obs.row(1).transpose();
    double log_c = 0.0;
    Eigen::VectorXd m = model.mu0;
    Eigen::MatrixXd P = model.Gamma0;
    {
      const Eigen::MatrixXd S = model.H * P * model.H.transpose() + model.R;
      log_c += log_mvn(y0, model.H * m, S);
      const Eigen::MatrixXd K = P * model.H.transpose() * S.inverse();
      m = m + K * (y0 - model.H * m);
      P = P - K * model.H * P;
      P = 0.5 * (P + P.transpose()).eval();
    }
    Eigen::VectorXd jm(2 * n);
    jm << m, model.F * m;
    const Eigen::MatrixXd cross = P * model.F.transpose();
    Eigen::MatrixXd jc(2 * n, 2 * n);
    jc.topLeftCorner(n, n) = P;
    jc.topRightCorner(n, n) = cross;
    jc.bottomLeftCorner(n, n) = cross.transpose();
    jc.bottomRightCorner(n, n) = model.F * cross + model.Q;
    {
      const Eigen::MatrixXd S =
          model.H * jc.bottomRightCorner(n, n) * model.H.transpose() + model.R;
      log_c += log_mvn(y1, model.H * jm.tail(n), S);
      Eigen::MatrixXd Cxy(2 * n, model.obs_dim());
      Cxy.topRows(n) = jc.topRightCorner(n, n) * model.H.transpose();
      Cxy.bottomRows(n) = jc.bottomRightCorner(n, n) * model.H.transpose();
      const Eigen::MatrixXd K = Cxy * S.inverse();
      jm += K * (y1 - model.H * jm.tail(n));
      jc -= K * Cxy.transpose();
      jc = 0.5 * (jc + jc.transpose()).eval();
    }
    const Eigen::MatrixXd S11 = jc.bottomRightCorner(n, n);
    const Eigen::MatrixXd S01 = jc.topRightCorner(n, n);
    const Eigen::MatrixXd S11i = S11.inverse();
    AffineStepMap am;
    am.C = sym_sqrt(S11);
    am.c = jm.tail(n);
    am.A = sym_sqrt(jc.topLeftCorner(n, n) - S01 * S11i * S01.transpose());
    am.B = S01 * S11i * am.C;
    am.a = jm.head(n);
    StepMap sm;
    sm.n = n;
    sm.p = 0;
    sm.affine = std::move(am);
    sm.log_c = log_c;
    state.steps.push_back(std::move(sm));
    c_prev = jm.tail(n);
    C_prev = state.steps.back().affine->C;
    start = 1;
  } else {
    c_prev = state.steps.back().affine->c;
    C_prev = state.steps.back().affine->C;
  }
  for (int i = start; i < total_steps; ++i) {
    const Eigen::VectorXd y_next = obs.row(i + 1).transpose();
    state.steps.push_back(linear_gaussian_step(model.F, model.Q, model.H,
                                               model.R, c_prev, C_prev, y_next));
  }
  return state;
}

Eigen::MatrixXd sample_smoothing(const SmootherState& state, int m,
                                 std::uint64_t seed) {
  const int K = state.num_steps();
  if (K < 1) throw std::invalid_argument("sample_smoothing: empty state");
  const int n = state.n, p = state.p;
  NormalSampler s(seed);
  Eigen::MatrixXd out(m, p + (K + 1) * n);
  for (int r = 0; r < m; ++r) {
    const Eigen::VectorXd xth = s.vector(p);
    std::vector<Eigen::VectorXd> xs(K + 1);
    for (int j = K; j >= 0; --j) xs[j] = s.vector(n);
    Eigen::VectorXd wth = xth;
    Eigen::VectorXd w = xs[K];
    std::vector<Eigen::VectorXd> z(K + 1);
    for (int j = K - 1; j >= 0; --j) {
      const StepMap& sm = state.steps[j];
      if (j == K - 1) z[K] = sm.m1(wth, w);
      const Eigen::VectorXd v = sm.m0(wth, xs[j], w);
      const Eigen::VectorXd wth_new = sm.m_theta(wth);
      if (j > 0) {
        z[j] = state.steps[j - 1].m1(wth_new, v);
        w = v;
        wth = wth_new;
      } else {
        z[0] = v;
        wth = wth_new;
      }
    }
    if (p > 0) out.row(r).head(p) = wth.transpose();
    for (int j = 0; j <= K; ++j)
      out.row(r).segment(p + j * n, n) = z[j].transpose();
  }
  return out;
}

Eigen::MatrixXd sample_filtering(const SmootherState& state, int m,
                                 std::uint64_t seed) {
  const int K = state.num_steps();
  if (K < 1) throw std::invalid_argument("sample_filtering: empty state");
  const int n = state.n, p = state.p;
  NormalSampler s(seed);
  Eigen::MatrixXd out(m, p + n);
  const StepMap& last = state.steps[K - 1];
  for (int r = 0; r < m; ++r) {
    const Eigen::VectorXd xth = s.vector(p);
    const Eigen::VectorXd x = s.vector(n);
    if (p > 0)
      out.row(r).head(p) = state.t_theta[K - 1].evaluate(xth).transpose();
    out.row(r).tail(n) = last.m1(xth, x).transpose();
  }
  return out;
}

Eigen::VectorXd Lag1Map::evaluate(const Eigen::VectorXd& x) const {
  const int n = state->n;
  if (state->p != 0)
    throw std::invalid_argument("Lag1Map: parameter-free state required");
  if (static_cast<int>(x.size()) != 2 * n)
    throw std::invalid_argument("Lag1Map: input must have dim 2n");
  const Eigen::VectorXd xk = x.head(n);
  const Eigen::VectorXd xk1 = x.tail(n);
  const Eigen::VectorXd empty;
  const StepMap& sm = state->steps[k];
  Eigen::VectorXd out(2 * n);
  out.tail(n) = sm.m1(empty, xk1);
  const Eigen::VectorXd v = sm.m0(empty, xk, xk1);
  if (k == 0) {
    out.head(n) = v;
  } else {
    out.head(n) = state->steps[k - 1].m1(empty, v);
  }
  return out;
}

Lag1Map lag1_map(const SmootherState& state, int k) {
  if (k < 0 || k >= state.num_steps())
    throw std::invalid_argument("lag1_map: step index out of range");
  return Lag1Map{&state, k};
}

double evidence(const SmootherState& state) {
  double s = 0.0;
  for (const auto& st : state.steps) s += st.log_c;
  return s;
}

SmootherState fixed_point_smoother(const StateSpaceModel& model,
                                   const Eigen::MatrixXd& obs,
                                   const TemplateConfig& config) {
  if (model.param_dim != 0)
    throw std::invalid_argument("fixed_point_smoother: parameter-free model required");
  if (obs.rows() < 3)
    throw std::invalid_argument("fixed_point_smoother: need at least three rows");
  const Eigen::VectorXd y0 = obs.row(0).transpose();
  StateSpaceModel w;
  w.state_dim = model.state_dim;
  w.obs_dim = model.obs_dim;
  w.param_dim = model.state_dim;
  w.log_param_prior = [model, y0](const Eigen::VectorXd& th) {
    const Eigen::VectorXd empty;
    return model.log_initial(th, empty) + model.log_likelihood(y0, th, empty);
  };
  w.log_initial = [model](const Eigen::VectorXd& z0, const Eigen::VectorXd& th) {
    return model.log_transition(z0, th, Eigen::VectorXd());
  };
  w.log_transition = [model](const Eigen::VectorXd& z1, const Eigen::VectorXd& z0,
                             const Eigen::VectorXd&) {
    return model.log_transition(z1, z0, Eigen::VectorXd());
  };
  w.log_likelihood = [model](const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                             const Eigen::VectorXd&) {
    return model.log_likelihood(y, z, Eigen::VectorXd());
  };
  SmootherState state =
      assimilate(w, obs.bottomRows(obs.rows() - 1), config, nullptr);
  state.mode = SmootherMode::fixed_point;
  return state;
}

namespace {

using nlohmann::json;

json config_to_json(const TemplateConfig& c) {
  json j;
  j["degree"] = c.degree;
  j["rectifier"] = rectifier_name(c.rectifier);
  j["gh_order"] = c.gh_order;
  j["mc_m"] = c.mc_m;
  j["seed"] = c.seed;
  j["regression_points"] = c.regression_points;
  j["fit"] = {{"optimizer", optimizer_name(c.fit.optimizer)},
              {"max_iterations", c.fit.max_iterations},
              {"grad_tol", c.fit.grad_tol},
              {"threads", c.fit.threads}};
  return j;
}

TemplateConfig config_from_json(const json& j) {
  TemplateConfig c;
  c.degree = j.at("degree").get<int>();
  c.rectifier = rectifier_from_name(j.at("rectifier").get<std::string>());
  c.gh_order = j.at("gh_order").get<int>();
  c.mc_m = j.at("mc_m").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.regression_points = j.at("regression_points").get<int>();
  const json& f = j.at("fit");
  c.fit.optimizer = optimizer_from_name(f.at("optimizer").get<std::string>());
  c.fit.max_iterations = f.at("max_iterations").get<int>();
  c.fit.grad_tol = f.at("grad_tol").get<double>();
  c.fit.threads = f.at("threads").get<int>();
  return c;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

std::string step_filename(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%03d.json", i);
  return buf;
}

std::string t_theta_filename(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t_theta_%03d.json", i);
  return buf;
}

void write_if_absent(const std::filesystem::path& path, const std::string& body) {
  if (std::filesystem::exists(path)) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

}  // namespace

void save_state(const SmootherState& state, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (int i = 0; i < state.num_steps(); ++i) {
    const StepMap& sm = state.steps[i];
    json j;
    j["n"] = sm.n;
    j["p"] = sm.p;
    j["log_c"] = sm.log_c;
    j["variance_diag"] = sm.variance_diag;
    if (sm.is_affine()) {
      j["affine"] = {{"A", matrix_to_json(sm.affine->A)},
                     {"B", matrix_to_json(sm.affine->B)},
                     {"C", matrix_to_json(sm.affine->C)},
                     {"a", vector_to_json(sm.affine->a)},
                     {"c", vector_to_json(sm.affine->c)}};
    } else {
      j["map"] = json::parse(map_to_json_string(*sm.tri));
    }
    write_if_absent(fs::path(dir) / step_filename(i), j.dump(2) + "\n");
  }
  for (size_t i = 0; i < state.t_theta.size(); ++i)
    write_if_absent(fs::path(dir) / t_theta_filename(static_cast<int>(i)),
                    map_to_json_string(state.t_theta[i]));
  json man;
  man["mode"] = mode_name(state.mode);
  man["n"] = state.n;
  man["p"] = state.p;
  man["num_steps"] = state.num_steps();
  man["num_t_theta"] = state.t_theta.size();
  man["model_hash"] = state.model_hash;
  man["config"] = config_to_json(state.config);
  json logc = json::array(), vd = json::array();
  for (const auto& sm : state.steps) {
    logc.push_back(sm.log_c);
    vd.push_back(sm.variance_diag);
  }
  man["log_c"] = std::move(logc);
  man["variance_diag"] = std::move(vd);
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << man.dump(2) << "\n";
}

SmootherState load_state(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest in " + dir);
  json man;
  in >> man;
  SmootherState state;
  state.mode = mode_from_name(man.at("mode").get<std::string>());
  state.n = man.at("n").get<int>();
  state.p = man.at("p").get<int>();
  state.model_hash = man.at("model_hash").get<std::string>();
  state.config = config_from_json(man.at("config"));
  const int num_steps = man.at("num_steps").get<int>();
  const int num_tt = man.at("num_t_theta").get<int>();
  for (int i = 0; i < num_steps; ++i) {
    std::ifstream sin(fs::path(dir) / step_filename(i), std::ios::binary);
    if (!sin)
      throw std::runtime_error("missing step file " + step_filename(i));
    json j;
    sin >> j;
    StepMap sm;
    sm.n = j.at("n").get<int>();
    sm.p = j.at("p").get<int>();
    sm.log_c = j.at("log_c").get<double>();
    sm.variance_diag = j.at("variance_diag").get<double>();
    if (j.contains("affine")) {
      const json& a = j.at("affine");
      AffineStepMap am;
      am.A = matrix_from_json(a.at("A"));
      am.B = matrix_from_json(a.at("B"));
      am.C = matrix_from_json(a.at("C"));
      am.a = vector_from_json(a.at("a"));
      am.c = vector_from_json(a.at("c"));
      sm.affine = std::move(am);
    } else {
      sm.tri = map_from_json_string(j.at("map").dump());
    }
    state.steps.push_back(std::move(sm));
  }
  for (int i = 0; i < num_tt; ++i) {
    std::ifstream tin(fs::path(dir) / t_theta_filename(i), std::ios::binary);
    if (!tin)
      throw std::runtime_error("missing t_theta file " + t_theta_filename(i));
    std::ostringstream ss;
    ss << tin.rdbuf();
    state.t_theta.push_back(map_from_json_string(ss.str()));
  }
  return state;
}

}  // namespace lowdim
