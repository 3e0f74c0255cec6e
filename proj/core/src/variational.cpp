#include <lowdim/variational.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace lowdim {

namespace {

const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gl_rule() {
  static const auto rule = gauss_legendre_01(kGaussLegendreOrder);
  return rule;
}

/// Precomputed basis design matrices at the rule's points for one map
/// structure; objective and gradient reduce to dense matrix-vector products.
class Workspace {
 public:
  Workspace(const MonotoneTriangularMap& tmpl, const ReferenceRule& rule)
      : map_(tmpl), rule_(rule) {
    const int npts = static_cast<int>(rule.points.rows());
    const int nq = kGaussLegendreOrder;
    const auto& [glx, glw] = gl_rule();
    glw_ = glw;
    comps_.resize(tmpl.comps.size());
    coeff_offsets_.resize(tmpl.comps.size());
    int off = 0;
    for (size_t k = 0; k < tmpl.comps.size(); ++k) {
      const MapComponent& c = tmpl.comps[k];
      CompCache& cc = comps_[k];
      coeff_offsets_[k] = off;
      cc.na = static_cast<int>(c.a.size());
      cc.nb = static_cast<int>(c.b.size());
      off += cc.na + cc.nb;
      const int v = static_cast<int>(c.off_actives.size());
      cc.output = c.output;
      cc.apsi.resize(npts, cc.na);
      cc.psi_q.resize(static_cast<long>(npts) * nq, cc.nb);
      cc.psi_d.resize(npts, cc.nb);
      cc.xd.resize(npts);
      std::vector<int> bdeg(cc.nb);
      for (int j = 0; j < cc.nb; ++j) bdeg[j] = c.b_indices[j][v];
      for (int p = 0; p < npts; ++p) {
        Eigen::VectorXd xo(v);
        for (int j = 0; j < v; ++j) xo[j] = rule.points(p, c.off_actives[j] - 1);
        cc.xd[p] = rule.points(p, c.output - 1);
        for (int i = 0; i < cc.na; ++i) {
          double prod = 1.0;
          for (int j = 0; j < v; ++j)
            prod *= basis_eval(tmpl.offdiag_family, c.a_indices[i][j], xo[j]);
          cc.apsi(p, i) = prod;
        }
        for (int i = 0; i < cc.nb; ++i) {
          double prod = 1.0;
          for (int j = 0; j < v; ++j)
            prod *= basis_eval(tmpl.offdiag_family, c.b_indices[i][j], xo[j]);
          for (int q = 0; q < nq; ++q)
            cc.psi_q(static_cast<long>(p) * nq + q, i) =
                prod * basis_eval(tmpl.diag_family, bdeg[i], cc.xd[p] * glx[q]);
          cc.psi_d(p, i) = prod * basis_eval(tmpl.diag_family, bdeg[i], cc.xd[p]);
        }
      }
    }
    n_coeffs_ = off;
  }

  int n_coeffs() const { return n_coeffs_; }
  int npts() const { return static_cast<int>(rule_.points.rows()); }
  int dim() const { return map_.dim; }
  const ReferenceRule& rule() const { return rule_; }

  struct Forward {
    Eigen::MatrixXd y;       // npts x dim, transported points
    Eigen::VectorXd logdet;  // npts
    std::vector<Eigen::VectorXd> bq;  // per comp, npts*nq diag-expansion values
    std::vector<Eigen::VectorXd> bd;  // per comp, npts values at the diagonal
  };

  Forward forward(const Eigen::VectorXd& coeffs) const {
    const int nq = kGaussLegendreOrder;
    const int np = npts();
    Forward f;
    f.y = rule_.points;
    f.logdet = Eigen::VectorXd::Zero(np);
    f.bq.resize(comps_.size());
    f.bd.resize(comps_.size());
    for (size_t k = 0; k < comps_.size(); ++k) {
      const CompCache& cc = comps_[k];
      const int off = coeff_offsets_[k];
      const auto a = coeffs.segment(off, cc.na);
      const auto b = coeffs.segment(off + cc.na, cc.nb);
      f.bq[k] = cc.psi_q * b;
      f.bd[k] = cc.psi_d * b;
      Eigen::VectorXd val = cc.apsi * a;
      for (int p = 0; p < np; ++p) {
        double integral = 0.0;
        for (int q = 0; q < nq; ++q)
          integral +=
              glw_[q] * rectify(map_.rectifier,
                                f.bq[k][static_cast<long>(p) * nq + q], map_.eps);
        val[p] += cc.xd[p] * integral;
        f.logdet[p] += std::log(rectify(map_.rectifier, f.bd[k][p], map_.eps));
      }
      f.y.col(cc.output - 1) = val;
    }
    return f;
  }

  /// grad += sum_p out_weight(p, output_k-1) * dT^k/dc + ld_weight[p] * dlogdet/dc
  void accumulate_grad(const Forward& f, const Eigen::MatrixXd& out_weight,
                       const Eigen::VectorXd& ld_weight,
                       Eigen::VectorXd& grad) const {
    const int nq = kGaussLegendreOrder;
    const int np = npts();
    Eigen::VectorXd cq(static_cast<long>(np) * nq), cd(np);
    for (size_t k = 0; k < comps_.size(); ++k) {
      const CompCache& cc = comps_[k];
      const int off = coeff_offsets_[k];
      const auto ow = out_weight.col(cc.output - 1);
      grad.segment(off, cc.na) += cc.apsi.transpose() * ow;
      for (int p = 0; p < np; ++p) {
        const double s = ow[p] * cc.xd[p];
        for (int q = 0; q < nq; ++q)
          cq[static_cast<long>(p) * nq + q] =
              s * glw_[q] *
              rectify_deriv(map_.rectifier, f.bq[k][static_cast<long>(p) * nq + q]);
        const double r = rectify(map_.rectifier, f.bd[k][p], map_.eps);
        cd[p] = ld_weight[p] * rectify_deriv(map_.rectifier, f.bd[k][p]) / r;
      }
      grad.segment(off + cc.na, cc.nb) +=
          cc.psi_q.transpose() * cq + cc.psi_d.transpose() * cd;
    }
  }

 private:
  struct CompCache {
    int na = 0, nb = 0, output = 0;
    Eigen::MatrixXd apsi;   // npts x na
    Eigen::MatrixXd psi_q;  // npts*nq x nb, diag basis at scaled GL nodes
    Eigen::MatrixXd psi_d;  // npts x nb, diag basis at the diagonal coordinate
    Eigen::VectorXd xd;
  };
  MonotoneTriangularMap map_;  // structure only; coefficients passed per call
  ReferenceRule rule_;
  Eigen::VectorXd glw_;
  std::vector<CompCache> comps_;
  std::vector<int> coeff_offsets_;
  int n_coeffs_ = 0;
};

struct ObjectiveResult {
  double value = 0.0;
  Eigen::VectorXd grad;
  bool clamped = false;
};

/// Evaluates the target (value + gradient) at every transported point, in
/// parallel over points; per-point storage keeps the reduction deterministic
/// at any thread count.
void eval_target_batch(const LogDensity& logpi, const Eigen::MatrixXd& y,
                       int threads, Eigen::VectorXd& lp, Eigen::MatrixXd& gw) {
  const int np = static_cast<int>(y.rows());
  lp.resize(np);
  gw.resize(np, y.cols());
  auto run = [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      const Eigen::VectorXd x = y.row(p).transpose();
      lp[p] = logpi.eval(x);
      if (std::isfinite(lp[p]) && lp[p] >= -kObjectiveClamp)
        gw.row(p) = logpi.gradient(x).transpose();
      else
        gw.row(p).setZero();
    }
  };
  threads = std::max(1, std::min(threads, np));
  if (threads == 1) {
    run(0, np);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (np + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk, hi = std::min(np, (t + 1) * chunk);
    if (lo < hi) pool.emplace_back(run, lo, hi);
  }
  for (auto& th : pool) th.join();
}

ObjectiveResult kl_eval(const Workspace& ws, const Eigen::VectorXd& coeffs,
                        const LogDensity& logpi, int threads) {
  const int np = ws.npts();
  const Workspace::Forward f = ws.forward(coeffs);
  Eigen::VectorXd lp;
  Eigen::MatrixXd gw;
  eval_target_batch(logpi, f.y, threads, lp, gw);
  ObjectiveResult r;
  r.grad = Eigen::VectorXd::Zero(ws.n_coeffs());
  Eigen::MatrixXd out_weight(np, ws.dim());
  Eigen::VectorXd ld_weight(np);
  for (int p = 0; p < np; ++p) {
    const double w = ws.rule().weights[p];
    if (!std::isfinite(lp[p]) || lp[p] < -kObjectiveClamp) {
      r.value += w * kObjectiveClamp;
      r.clamped = true;
      out_weight.row(p).setZero();
      ld_weight[p] = 0.0;
      continue;
    }
    r.value -= w * (lp[p] + f.logdet[p]);
    out_weight.row(p) = -w * gw.row(p);
    ld_weight[p] = -w;
  }
  ws.accumulate_grad(f, out_weight, ld_weight, r.grad);
  return r;
}

struct OptimResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  Eigen::VectorXd gx;
  int iterations = 0;
  bool converged = false;
};

using ObjFn = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

void write_trace_header(std::ofstream& out) {
  out << "iteration,objective,gradient_norm\n";
}

OptimResult minimize_bfgs(const ObjFn& f, Eigen::VectorXd x0, const FitOptions& opts) {
  OptimResult res;
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = std::move(x0);
  auto [fx, g] = f(x);
  std::ofstream trace;
  if (!opts.trace_csv_path.empty()) {
    trace.open(opts.trace_csv_path);
    write_trace_header(trace);
    trace << 0 << "," << fx << "," << g.lpNorm<Eigen::Infinity>() << "\n";
  }
  int it = 0;
  bool reset_used = false;
  for (; it < opts.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -(H * g);
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      H.setIdentity();
      d = -g;
      gd = g.dot(d);
    }
    double t = 1.0;
    double ft = 0.0;
    Eigen::VectorXd xt, gt;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      xt = x + t * d;
      auto [fv, gv] = f(xt);
      if (std::isfinite(fv) && fv <= fx + 1e-4 * t * gd) {
        ft = fv;
        gt = std::move(gv);
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      if (reset_used) break;
      H.setIdentity();
      reset_used = true;
      continue;
    }
    reset_used = false;
    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd yv = gt - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }
    x = std::move(xt);
    fx = ft;
    g = std::move(gt);
    if (trace.is_open())
      trace << (it + 1) << "," << fx << "," << g.lpNorm<Eigen::Infinity>() << "\n";
  }
  res.x = std::move(x);
  res.fx = fx;
  res.gx = std::move(g);
  res.iterations = it;
  if (!res.converged)
    res.converged = res.gx.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
  return res;
}

OptimResult minimize_newton_cg(const ObjFn& f, Eigen::VectorXd x0,
                               const FitOptions& opts) {
  OptimResult res;
  Eigen::VectorXd x = std::move(x0);
  auto [fx, g] = f(x);
  std::ofstream trace;
  if (!opts.trace_csv_path.empty()) {
    trace.open(opts.trace_csv_path);
    write_trace_header(trace);
  }
  auto hessvec = [&](const Eigen::VectorXd& xc, const Eigen::VectorXd& gc,
                     const Eigen::VectorXd& v) {
    const double vn = v.norm();
    const double eps = 1e-7 * (1.0 + xc.norm()) / std::max(vn, 1e-300);
    auto [f2, g2] = f(xc + eps * v);
    (void)f2;
    return Eigen::VectorXd((g2 - gc) / eps);
  };
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    // truncated CG on H d = -g with negative-curvature exit
    Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd r = -g, p = r;
    const double cg_tol = std::min(0.5, std::sqrt(g.norm())) * g.norm();
    for (int cg = 0; cg < 50; ++cg) {
      if (r.norm() <= cg_tol) break;
      const Eigen::VectorXd Hp = hessvec(x, g, p);
      const double pHp = p.dot(Hp);
      if (pHp <= 1e-12 * p.squaredNorm()) {
        if (cg == 0) d = -g;
        break;
      }
      const double alpha = r.squaredNorm() / pHp;
      d += alpha * p;
      const double rn_old = r.squaredNorm();
      r -= alpha * Hp;
      p = r + (r.squaredNorm() / rn_old) * p;
    }
    if (d.squaredNorm() == 0.0) d = -g;
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      d = -g;
      gd = g.dot(d);
    }
    double t = 1.0;
    bool ok = false;
    Eigen::VectorXd xt, gt;
    double ft = 0.0;
    for (int ls = 0; ls < 50; ++ls) {
      xt = x + t * d;
      auto [fv, gv] = f(xt);
      if (std::isfinite(fv) && fv <= fx + 1e-4 * t * gd) {
        ft = fv;
        gt = std::move(gv);
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    x = std::move(xt);
    fx = ft;
    g = std::move(gt);
    if (trace.is_open())
      trace << (it + 1) << "," << fx << "," << g.lpNorm<Eigen::Infinity>() << "\n";
  }
  res.x = std::move(x);
  res.fx = fx;
  res.gx = std::move(g);
  res.iterations = it;
  if (!res.converged)
    res.converged = res.gx.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
  return res;
}

OptimResult minimize(const ObjFn& f, Eigen::VectorXd x0, const FitOptions& opts) {
  if (opts.optimizer == OptimizerKind::newton_cg)
    return minimize_newton_cg(f, std::move(x0), opts);
  return minimize_bfgs(f, std::move(x0), opts);
}

}  // namespace

std::pair<double, Eigen::VectorXd> kl_objective(const MonotoneTriangularMap& m,
                                                const LogDensity& logpi_bar,
                                                const ReferenceRule& rule,
                                                int threads) {
  if (m.dim != logpi_bar.dim || m.dim != rule.dim)
    throw std::invalid_argument("kl_objective: dimension mismatch");
  Workspace ws(m, rule);
  auto r = kl_eval(ws, m.coefficients(), logpi_bar, threads);
  return {r.value, std::move(r.grad)};
}

std::pair<MonotoneTriangularMap, FitReport> compute_map(
    const LogDensity& logpi_bar, const MonotoneTriangularMap& tmpl,
    const ReferenceRule& rule, const FitOptions& opts) {
  if (tmpl.dim != logpi_bar.dim || tmpl.dim != rule.dim)
    throw std::invalid_argument("compute_map: dimension mismatch");
  Workspace ws(tmpl, rule);
  bool clamped = false;
  ObjFn f = [&](const Eigen::VectorXd& c) {
    auto r = kl_eval(ws, c, logpi_bar, opts.threads);
    clamped = clamped || r.clamped;
    return std::make_pair(r.value, std::move(r.grad));
  };
  OptimResult res = minimize(f, tmpl.coefficients(), opts);
  MonotoneTriangularMap fitted = tmpl;
  fitted.set_coefficients(res.x);
  FitReport rep;
  rep.final_objective = res.fx;
  rep.iterations = res.iterations;
  rep.gradient_norm = res.gx.lpNorm<Eigen::Infinity>();
  rep.converged = res.converged;
  rep.clamped = clamped;
  rep.variance_diagnostic = variance_diagnostic(fitted, logpi_bar, rule);
  rep.log_normalizing_constant = log_normalizing_constant(fitted, logpi_bar, rule);
  return {std::move(fitted), rep};
}

namespace {

/// Weighted mean and variance of log pibar(T(x)) + logdet(x) - log eta(x).
std::pair<double, double> log_ratio_moments(const MonotoneTriangularMap& m,
                                            const LogDensity& logpi_bar,
                                            const ReferenceRule& rule) {
  const int npts = static_cast<int>(rule.points.rows());
  double mean = 0.0;
  Eigen::VectorXd r(npts);
  for (int p = 0; p < npts; ++p) {
    const Eigen::VectorXd x = rule.points.row(p).transpose();
    const Eigen::VectorXd y = m.evaluate(x);
    double lp = logpi_bar.eval(y);
    if (!std::isfinite(lp)) lp = -kObjectiveClamp;
    r[p] = lp + m.log_det_jacobian(x) - log_std_normal(x);
    mean += rule.weights[p] * r[p];
  }
  double var = 0.0;
  for (int p = 0; p < npts; ++p) {
    const double d = r[p] - mean;
    var += rule.weights[p] * d * d;
  }
  return {mean, var};
}

}  // namespace

double variance_diagnostic(const MonotoneTriangularMap& m,
                           const LogDensity& logpi_bar, const ReferenceRule& rule) {
  return 0.5 * log_ratio_moments(m, logpi_bar, rule).second;
}

double log_normalizing_constant(const MonotoneTriangularMap& m,
                                const LogDensity& logpi_bar,
                                const ReferenceRule& rule) {
  return log_ratio_moments(m, logpi_bar, rule).first;
}

MonotoneTriangularMap regress_map(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& target_fn,
    const MonotoneTriangularMap& tmpl, const ReferenceRule& rule,
    const FitOptions& opts, double* final_residual) {
  if (tmpl.dim != rule.dim)
    throw std::invalid_argument("regress_map: dimension mismatch");
  Workspace ws(tmpl, rule);
  const int npts = static_cast<int>(rule.points.rows());
  Eigen::MatrixXd Y(npts, tmpl.dim);
  for (int p = 0; p < npts; ++p)
    Y.row(p) = target_fn(rule.points.row(p).transpose()).transpose();
  ObjFn f = [&](const Eigen::VectorXd& c) {
    const Workspace::Forward fwd = ws.forward(c);
    const Eigen::MatrixXd resid = fwd.y - Y;
    double value = 0.0;
    Eigen::MatrixXd out_weight(npts, tmpl.dim);
    for (int p = 0; p < npts; ++p) {
      const double w = rule.weights[p];
      value += w * resid.row(p).squaredNorm();
      out_weight.row(p) = 2.0 * w * resid.row(p);
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(ws.n_coeffs());
    ws.accumulate_grad(fwd, out_weight, Eigen::VectorXd::Zero(npts), grad);
    return std::make_pair(value, std::move(grad));
  };
  // tighter default gradient tolerance: residual landscapes are flat near 0
  FitOptions o = opts;
  o.grad_tol = std::min(opts.grad_tol, 1e-8);
  OptimResult res = minimize(f, tmpl.coefficients(), o);
  MonotoneTriangularMap fitted = tmpl;
  fitted.set_coefficients(res.x);
  if (final_residual) *final_residual = res.fx;
  return fitted;
}

}  // namespace lowdim
