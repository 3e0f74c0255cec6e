#pragma once

#include <functional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include <lowdim/density.hpp>
#include <lowdim/map.hpp>
#include <lowdim/quadrature.hpp>

namespace lowdim {

enum class OptimizerKind { bfgs, newton_cg };

struct FitOptions {
  OptimizerKind optimizer = OptimizerKind::bfgs;
  int max_iterations = 500;
  double grad_tol = 1e-6;  // infinity norm
  int threads = 1;
  std::string trace_csv_path;  // empty: no trace
};

struct FitReport {
  double final_objective = 0.0;
  double variance_diagnostic = 0.0;
  double log_normalizing_constant = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  bool clamped = false;  // some sample hit the -inf clamp during the final eval
};

inline constexpr double kObjectiveClamp = 1e10;

/// SAA KL objective: -sum_i w_i [log pibar(T(x_i)) + log det grad T(x_i)],
/// with gradient w.r.t. the map coefficients.  Non-finite target values are
/// clamped at kObjectiveClamp with a zeroed per-sample gradient.
std::pair<double, Eigen::VectorXd> kl_objective(const MonotoneTriangularMap& m,
                                                const LogDensity& logpi_bar,
                                                const ReferenceRule& rule,
                                                int threads = 1);

/// Algorithm: fit template coefficients by quasi-Newton minimization of the
/// KL objective.  Returns the best iterate even on non-convergence.
std::pair<MonotoneTriangularMap, FitReport> compute_map(
    const LogDensity& logpi_bar, const MonotoneTriangularMap& tmpl,
    const ReferenceRule& rule, const FitOptions& opts = {});

/// 0.5 * weighted variance of log pibar(T(X)) + log det grad T(X) - log eta(X).
double variance_diagnostic(const MonotoneTriangularMap& m,
                           const LogDensity& logpi_bar, const ReferenceRule& rule);

/// Weighted mean of the same log-ratio: estimator of log of the target's
/// normalizing constant.
double log_normalizing_constant(const MonotoneTriangularMap& m,
                                const LogDensity& logpi_bar,
                                const ReferenceRule& rule);

/// Weighted least-squares regression of a vector-valued function onto the
/// template's coefficient space.
MonotoneTriangularMap regress_map(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& target_fn,
    const MonotoneTriangularMap& tmpl, const ReferenceRule& rule,
    const FitOptions& opts = {}, double* final_residual = nullptr);

}  // namespace lowdim
