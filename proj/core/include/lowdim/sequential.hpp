#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <lowdim/density.hpp>
#include <lowdim/map.hpp>
#include <lowdim/models.hpp>
#include <lowdim/variational.hpp>

namespace lowdim {

/// Closed-form affine step map (linear-Gaussian case, no parameters):
///   z_i     = A x_i + B x_{i+1} + a        (M^0)
///   z_{i+1} = C x_{i+1} + c                (M^1)
struct AffineStepMap {
  Eigen::MatrixXd A, B, C;
  Eigen::VectorXd a, c;
};

/// One fitted (or closed-form) step map M_i over dim p + 2n with block
/// structure [M^Theta(x_th); M^0(x_th, x_i, x_{i+1}); M^1(x_th, x_{i+1})].
/// Fitted maps lay coordinates out as (theta, x_i, x_{i+1}) with sigma
/// visiting theta first, then the x_{i+1} block, then the x_i block.
struct StepMap {
  int n = 0, p = 0;
  std::optional<MonotoneTriangularMap> tri;
  std::optional<AffineStepMap> affine;
  double log_c = 0.0;
  double variance_diag = 0.0;

  bool is_affine() const { return affine.has_value(); }
  Eigen::VectorXd m_theta(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd m0(const Eigen::VectorXd& theta, const Eigen::VectorXd& x_cur,
                     const Eigen::VectorXd& x_next) const;
  Eigen::VectorXd m1(const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x_next) const;
};

enum class SmootherMode { plain, with_params, fixed_point };

struct TemplateConfig {
  int degree = 2;
  Rectifier rectifier = Rectifier::shifted_square;
  int gh_order = 10;      // used when p + 2n <= 4
  int mc_m = 5000;        // used above
  std::uint64_t seed = 20260823ULL;
  int regression_points = 2000;
  FitOptions fit;
};

struct SmootherState {
  SmootherMode mode = SmootherMode::plain;
  int n = 0, p = 0;
  std::vector<StepMap> steps;
  /// Regressed running parameter map after each step (with_params /
  /// fixed_point modes); t_theta[i] approximates M_0^Th ∘ ... ∘ M_i^Th.
  std::vector<MonotoneTriangularMap> t_theta;
  TemplateConfig config;
  std::string model_hash;

  int num_steps() const { return static_cast<int>(steps.size()); }
};

/// Unnormalized step target pi^i over dim p + 2n, built from the recursion;
/// obs has one row per time index.
LogDensity step_target(const SmootherState& state, const StateSpaceModel& model,
                       const Eigen::MatrixXd& obs, int i);

/// Fit step maps for all observation rows (>= 2 required).  If `resume` is
/// given, its steps are kept untouched and only new steps are appended.
SmootherState assimilate(const StateSpaceModel& model, const Eigen::MatrixXd& obs,
                         const TemplateConfig& config,
                         const SmootherState* resume = nullptr);

/// Closed-form Lemma-4-style assimilation for linear-Gaussian models.
SmootherState assimilate_closed_form(const LinearGaussianSSM& model,
                                     const Eigen::MatrixXd& obs,
                                     const SmootherState* resume = nullptr);

/// One closed-form affine step map for k >= 1, given the previous filtering
/// mean/sqrt-covariance; updates (c_prev, C_prev) in place to the new
/// filtering output and returns the step map with its log normalizer.
StepMap linear_gaussian_step(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                             Eigen::VectorXd& c_prev, Eigen::MatrixXd& C_prev,
                             const Eigen::VectorXd& y_next);

/// Smoothing samples: columns theta(1..p), z_0 .. z_{k+1}; m rows.
Eigen::MatrixXd sample_smoothing(const SmootherState& state, int m,
                                 std::uint64_t seed);
/// Filtering samples at the last assimilated time: columns theta(1..p), z.
Eigen::MatrixXd sample_filtering(const SmootherState& state, int m,
                                 std::uint64_t seed);

/// Lag-1 joint map on dim 2n: x -> (z_k, z_{k+1}) | y_{0..k+1}.
/// For k = 0 the leading block is M_0^0 itself.
struct Lag1Map {
  const SmootherState* state = nullptr;
  int k = 0;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
};
Lag1Map lag1_map(const SmootherState& state, int k);

/// Cumulative log-evidence sum_i log c_i.
double evidence(const SmootherState& state);

/// Joint-recursion machinery with Theta := Z_0 (parameter-free model required).
SmootherState fixed_point_smoother(const StateSpaceModel& model,
                                   const Eigen::MatrixXd& obs,
                                   const TemplateConfig& config);

/// Directory persistence: manifest.json + step_XXX.json (+ t_theta_XXX.json).
/// Existing step files are never rewritten (resume byte-identity).
void save_state(const SmootherState& state, const std::string& dir);
SmootherState load_state(const std::string& dir);

}  // namespace lowdim
