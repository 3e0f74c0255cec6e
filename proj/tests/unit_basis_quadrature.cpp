#include <doctest.h>

#include <cmath>
#include <vector>

#include <lowdim/basis.hpp>
#include <lowdim/quadrature.hpp>

using namespace lowdim;

TEST_CASE("gauss_legendre_01 integrates polynomials and exp") {
  auto [x, w] = gauss_legendre_01(16);
  REQUIRE(x.size() == 16);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 0; k <= 31; ++k) {
    double s = 0.0;
    for (int i = 0; i < 16; ++i) s += w[i] * std::pow(x[i], k);
    CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
  }
  double s = 0.0;
  for (int i = 0; i < 16; ++i) s += w[i] * std::exp(x[i]);
  CHECK(s == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("gauss_hermite_prob matches standard-normal moments") {
  auto [x, w] = gauss_hermite_prob(10);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-13));
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0, m6 = 0;
  for (int i = 0; i < 10; ++i) {
    m1 += w[i] * x[i];
    m2 += w[i] * x[i] * x[i];
    m3 += w[i] * std::pow(x[i], 3);
    m4 += w[i] * std::pow(x[i], 4);
    m6 += w[i] * std::pow(x[i], 6);
  }
  CHECK(std::abs(m1) < 1e-13);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(m3) < 1e-12);
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("tensor rule weights and cross moments") {
  auto rule = ReferenceRule::gauss_hermite_tensor(2, 5);
  REQUIRE(rule.points.rows() == 25);
  CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  double x2y2 = 0, x4 = 0;
  for (int i = 0; i < rule.points.rows(); ++i) {
    const double a = rule.points(i, 0), b = rule.points(i, 1);
    x2y2 += rule.weights[i] * a * a * b * b;
    x4 += rule.weights[i] * a * a * a * a;
  }
  CHECK(x2y2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("monte carlo rule is seeded and uniformly weighted") {
  auto r1 = ReferenceRule::monte_carlo(3, 500, 42);
  auto r2 = ReferenceRule::monte_carlo(3, 500, 42);
  auto r3 = ReferenceRule::monte_carlo(3, 500, 43);
  CHECK((r1.points - r2.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.points - r3.points).cwiseAbs().maxCoeff() > 0.0);
  CHECK((r1.weights.array() - 1.0 / 500).abs().maxCoeff() < 1e-16);
}

TEST_CASE("NormalSampler is deterministic with sane moments") {
  NormalSampler s1(7), s2(7);
  double mean = 0, var = 0;
  const int m = 20000;
  std::vector<double> d(m);
  for (int i = 0; i < m; ++i) {
    d[i] = s1.next();
    CHECK(d[i] == s2.next());
    mean += d[i];
  }
  mean /= m;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= m - 1;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(m)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / m));
}

TEST_CASE("hermite polynomials and derivative recurrence") {
  for (double x : {-1.7, 0.0, 0.4, 2.3}) {
    CHECK(hermite_poly(0, x) == 1.0);
    CHECK(hermite_poly(1, x) == x);
    CHECK(hermite_poly(2, x) == doctest::Approx(x * x - 1.0));
    CHECK(hermite_poly(3, x) == doctest::Approx(x * x * x - 3 * x));
    for (int n = 1; n <= 6; ++n)
      CHECK(hermite_poly_deriv(n, x) ==
            doctest::Approx(n * hermite_poly(n - 1, x)).epsilon(1e-12));
  }
}

TEST_CASE("diagonal family: constant at index 0, decaying above") {
  for (double x : {-2.0, 0.3, 1.9}) {
    CHECK(hermite_function(0, x) == 1.0);
    for (int n = 1; n <= 4; ++n) {
      CHECK(hermite_function(n, x) ==
            doctest::Approx(hermite_poly(n, x) * std::exp(-x * x / 4)));
      const double h = 1e-6;
      const double fd =
          (hermite_function(n, x + h) - hermite_function(n, x - h)) / (2 * h);
      CHECK(hermite_function_deriv(n, x) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  CHECK(std::abs(hermite_function(3, 12.0)) < 1e-10);
}

TEST_CASE("total_degree_indices counts and ordering") {
  auto idx = total_degree_indices(3, 2);
  REQUIRE(idx.size() == 10);  // C(3+2,2)
  CHECK(idx[0] == std::vector<int>{0, 0, 0});
  for (const auto& mi : idx) {
    int s = 0;
    for (int v : mi) s += v;
    CHECK(s <= 2);
  }
  CHECK(total_degree_indices(1, 3).size() == 4);
}
