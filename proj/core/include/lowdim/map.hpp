#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <lowdim/basis.hpp>
#include <lowdim/density.hpp>

namespace lowdim {

enum class Rectifier { shifted_square, exp_rect };

std::string rectifier_name(Rectifier r);
Rectifier rectifier_from_name(const std::string& s);

double rectify(Rectifier r, double u, double eps);
double rectify_deriv(Rectifier r, double u);
/// u with rectify(r, u, eps) == 1.
double rectify_unit_preimage(Rectifier r, double eps);

inline constexpr double kInvertValueTol = 1e-10;
inline constexpr int kInvertMaxDoublings = 60;
inline constexpr int kGaussLegendreOrder = 16;

/// One component of a monotone sigma-triangular map:
///   T^{output}(x) = a(x_off) + int_0^{x_output} rectify(b(x_off, t)) dt
struct MapComponent {
  int output = 0;                           // ambient index sigma(k), 1-based
  std::vector<int> off_actives;             // ambient indices, sorted, excl. output
  std::vector<std::vector<int>> a_indices;  // multi-indices over off_actives
  std::vector<std::vector<int>> b_indices;  // over (off_actives..., diagonal)
  Eigen::VectorXd a, b;
};

class MonotoneTriangularMap {
 public:
  int dim = 0;
  std::vector<int> perm;  // sigma; perm[k-1] = comps[k-1].output
  Rectifier rectifier = Rectifier::shifted_square;
  double eps = 1e-8;
  BasisFamily offdiag_family = BasisFamily::hermite_poly;
  BasisFamily diag_family = BasisFamily::hermite_function;
  std::vector<MapComponent> comps;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  double log_det_jacobian(const Eigen::VectorXd& x) const;
  /// Full Jacobian dT/dx (row = output coordinate, ambient indexing).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  /// Solves evaluate(x) = y component-wise in sigma-order by bracketed
  /// Newton/bisection; throws std::runtime_error on bracket failure.
  Eigen::VectorXd invert(const Eigen::VectorXd& y) const;

  /// k is the 0-based component position in sigma-order.
  double component_value(int k, const Eigen::VectorXd& x) const;
  /// Diagonal partial derivative rectify(b(x_off, x_diag)) of component k.
  double component_diag_deriv(int k, const Eigen::VectorXd& x) const;
  /// Value and gradient w.r.t. the component's coefficients (a then b).
  double component_value_cgrad(int k, const Eigen::VectorXd& x,
                               Eigen::VectorXd& grad) const;
  /// log of the diagonal derivative, with coefficient gradient.
  double component_logdet_cgrad(int k, const Eigen::VectorXd& x,
                                Eigen::VectorXd& grad) const;

  int n_coeffs() const;
  Eigen::VectorXd coefficients() const;
  void set_coefficients(const Eigen::VectorXd& c);
  /// a = 0; b = constant with rectify == 1 (T becomes the identity).
  void init_identity();

  bool structurally_equal(const MonotoneTriangularMap& o) const;
};

MonotoneTriangularMap identity_map(int dim);

/// Template with total-degree `degree` expansions.  `actives` gives, per
/// sigma-position k (0-based), the ambient active set (must contain sigma(k)
/// and be a subset of {sigma(1)..sigma(k)}); empty means full prefixes.
MonotoneTriangularMap make_template(
    int dim, const std::vector<int>& perm, int degree,
    const std::vector<std::vector<int>>& actives = {},
    Rectifier rect = Rectifier::shifted_square,
    BasisFamily offdiag = BasisFamily::hermite_poly,
    BasisFamily diag = BasisFamily::hermite_function);

LogDensity pullback_logdensity(const MonotoneTriangularMap& m, const LogDensity& logpi);
LogDensity pushforward_logdensity(const MonotoneTriangularMap& m, const LogDensity& logeta);

/// Checkpoint JSON; round trip is bit-exact on coefficients.
std::string map_to_json_string(const MonotoneTriangularMap& m);
MonotoneTriangularMap map_from_json_string(const std::string& s);
void save_map(const MonotoneTriangularMap& m, const std::string& path);
MonotoneTriangularMap load_map(const std::string& path);

/// z = L x + c with invertible L.
struct AffineMap {
  Eigen::MatrixXd L;
  Eigen::VectorXd c;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const { return L * x + c; }
  double log_abs_det() const;
  Eigen::VectorXd invert(const Eigen::VectorXd& y) const;
};

/// A low-dimensional member of a composition: the inner map acts on ambient
/// coordinates `coords` (1-based) and every other coordinate passes through.
struct CompositionMember {
  int ambient_dim = 0;
  std::vector<int> coords;
  std::shared_ptr<const MonotoneTriangularMap> tri;
  std::shared_ptr<const AffineMap> affine;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  double log_det(const Eigen::VectorXd& x) const;
};

CompositionMember embed(MonotoneTriangularMap m, int ambient_dim,
                        std::vector<int> coords);
CompositionMember embed(AffineMap m, int ambient_dim, std::vector<int> coords);

/// T = members[0] ∘ members[1] ∘ ... (applied right-to-left).
struct MapComposition {
  int dim = 0;
  std::vector<CompositionMember> members;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  double log_det(const Eigen::VectorXd& x) const;
};

}  // namespace lowdim
