#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include <lowdim/map.hpp>
#include <lowdim/quadrature.hpp>

using namespace lowdim;

namespace {

MonotoneTriangularMap random_map(int dim, int degree, std::mt19937_64& gen,
                                 Rectifier rect = Rectifier::shifted_square) {
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), gen);
  auto m = make_template(dim, perm, degree, {}, rect);
  std::normal_distribution<double> nd(0, 0.3);
  Eigen::VectorXd c = m.coefficients();
  for (int i = 0; i < c.size(); ++i) c[i] += nd(gen);
  m.set_coefficients(c);
  return m;
}

Eigen::VectorXd random_point(int dim, std::mt19937_64& gen, double scale = 1.5) {
  std::normal_distribution<double> nd(0, scale);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = nd(gen);
  return x;
}

}  // namespace

TEST_CASE("identity map: evaluate, log-det, invert") {
  const auto m = identity_map(3);
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = random_point(3, gen);
    CHECK((m.evaluate(x) - x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(m.log_det_jacobian(x)) < 1e-12);
    CHECK((m.invert(x) - x).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("1-D affine map from constant coefficients") {
  const double mu = 1.3, sigma = 0.7;
  auto m = make_template(1, {1}, 1, {}, Rectifier::exp_rect);
  m.init_identity();
  Eigen::VectorXd c = m.coefficients();
  // a-expansion constant term first, then the b constant term
  c.setZero();
  c[0] = mu;
  const int na = int(m.comps[0].a.size());
  c[na] = std::log(sigma);
  m.set_coefficients(c);
  for (double x : {-2.0, 0.0, 1.1}) {
    Eigen::VectorXd v(1);
    v << x;
    CHECK(m.evaluate(v)[0] == doctest::Approx(mu + sigma * x).epsilon(1e-12));
    CHECK(m.log_det_jacobian(v) == doctest::Approx(std::log(sigma)).epsilon(1e-12));
  }
  Eigen::VectorXd y(1);
  y << 3.0;
  auto im = identity_map(1);
  // 1-D T(x) = 2x + 1: invert at y = 3 gives 1
  Eigen::VectorXd c2 = m.coefficients();
  c2[0] = 1.0;
  c2[na] = std::log(2.0);
  m.set_coefficients(c2);
  CHECK(m.invert(y)[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("integrated exponential: b(t) = t gives e - 1 at x = 1") {
  MonotoneTriangularMap m;
  m.dim = 1;
  m.perm = {1};
  m.rectifier = Rectifier::exp_rect;
  m.diag_family = BasisFamily::linear;
  MapComponent comp;
  comp.output = 1;
  comp.a_indices = {{}};
  comp.b_indices = {{0}, {1}};
  comp.a = Eigen::VectorXd::Zero(1);
  comp.b = Eigen::VectorXd::Zero(2);
  comp.b[1] = 1.0;  // b(t) = t
  m.comps = {comp};
  Eigen::VectorXd x(1);
  x << 1.0;
  CHECK(m.evaluate(x)[0] ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
}

TEST_CASE("randomized maps: monotone, invertible, consistent derivatives") {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 25; ++rep) {
    const int dim = 1 + int(gen() % 4);
    const int degree = 1 + int(gen() % 3);
    const auto m = random_map(dim, degree, gen);

    // strict diagonal monotonicity on sampled pairs
    for (int t = 0; t < 5; ++t) {
      const auto x = random_point(dim, gen);
      for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd x2 = x;
        x2[m.perm[k] - 1] += 0.5 + (gen() % 100) / 50.0;
        CHECK(m.evaluate(x2)[m.perm[k] - 1] > m.evaluate(x)[m.perm[k] - 1]);
      }
    }

    // round trip
    const auto x = random_point(dim, gen);
    const auto y = m.evaluate(x);
    CHECK((m.invert(y) - x).cwiseAbs().maxCoeff() < 1e-8);

    // log-det vs finite-difference Jacobian
    const double h = 1e-6;
    Eigen::MatrixXd J(dim, dim);
    for (int j = 0; j < dim; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (m.evaluate(xp) - m.evaluate(xm)) / (2 * h);
    }
    const double ld = std::log(std::abs(J.determinant()));
    CHECK(m.log_det_jacobian(x) == doctest::Approx(ld).epsilon(1e-5));

    // analytic full Jacobian
    const Eigen::MatrixXd Ja = m.jacobian(x);
    CHECK((Ja - J).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, J.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("coefficient gradients match finite differences") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 10; ++rep) {
    const int dim = 1 + int(gen() % 3);
    const int degree = 1 + int(gen() % 3);
    auto m = random_map(dim, degree, gen);
    const auto x = random_point(dim, gen, 1.0);
    for (int k = 0; k < dim; ++k) {
      const int nc = int(m.comps[k].a.size() + m.comps[k].b.size());
      Eigen::VectorXd gv(nc), gl(nc);
      const double v0 = m.component_value_cgrad(k, x, gv);
      const double l0 = m.component_logdet_cgrad(k, x, gl);
      CHECK(v0 == doctest::Approx(m.component_value(k, x)).epsilon(1e-13));
      CHECK(l0 == doctest::Approx(std::log(m.component_diag_deriv(k, x))).epsilon(1e-12));
      const double h = 1e-6;
      for (int c = 0; c < nc; ++c) {
        auto bump = [&](double d) {
          auto mc = m;
          if (c < mc.comps[k].a.size())
            mc.comps[k].a[c] += d;
          else
            mc.comps[k].b[c - mc.comps[k].a.size()] += d;
          return mc;
        };
        const auto mp = bump(h), mm = bump(-h);
        const double fdv =
            (mp.component_value(k, x) - mm.component_value(k, x)) / (2 * h);
        const double fdl = (std::log(mp.component_diag_deriv(k, x)) -
                            std::log(mm.component_diag_deriv(k, x))) /
                           (2 * h);
        CHECK(std::abs(gv[c] - fdv) < 1e-5 * std::max(1.0, std::abs(fdv)));
        CHECK(std::abs(gl[c] - fdl) < 2e-5 * std::max(1.0, std::abs(fdl)));
      }
    }
  }
}

TEST_CASE("sparsity is respected: inactive inputs have zero influence") {
  // 3-D, component 3 active only on {1, 3}: vary x2 and watch T^3
  auto m = make_template(3, {1, 2, 3}, 2, {{1}, {1, 2}, {1, 3}});
  std::mt19937_64 gen(13);
  Eigen::VectorXd c = m.coefficients();
  std::normal_distribution<double> nd(0, 0.3);
  for (int i = 0; i < c.size(); ++i) c[i] += nd(gen);
  m.set_coefficients(c);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_point(3, gen);
    Eigen::VectorXd x2 = x;
    x2[1] += 1.0 + (gen() % 5);
    CHECK(std::abs(m.evaluate(x2)[2] - m.evaluate(x)[2]) < 1e-12);
    CHECK(std::abs(m.evaluate(x2)[0] - m.evaluate(x)[0]) < 1e-12);
  }
}

TEST_CASE("checkpoint JSON round trip is bit exact") {
  std::mt19937_64 gen(5);
  const auto m = random_map(3, 2, gen, Rectifier::exp_rect);
  const auto s = map_to_json_string(m);
  const auto m2 = map_from_json_string(s);
  CHECK(m2.structurally_equal(m));
  CHECK((m2.coefficients() - m.coefficients()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(map_to_json_string(m2) == s);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "lowdim_map_test";
  fs::create_directories(dir);
  const auto path = (dir / "m.json").string();
  save_map(m, path);
  const auto m3 = load_map(path);
  CHECK((m3.coefficients() - m.coefficients()).cwiseAbs().maxCoeff() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("sigma-triangular equals conjugated lower-triangular") {
  std::mt19937_64 gen(21);
  const int dim = 4;
  const auto m = random_map(dim, 2, gen);
  // build the lower-triangular representation on relabeled coordinates:
  // position j holds ambient variable sigma(j)
  std::vector<int> pos(dim + 1);
  for (int j = 0; j < dim; ++j) pos[m.perm[j]] = j + 1;
  MonotoneTriangularMap lower = m;
  lower.perm.assign(dim, 0);
  std::iota(lower.perm.begin(), lower.perm.end(), 1);
  for (int k = 0; k < dim; ++k) {
    auto& comp = lower.comps[k];
    std::vector<int> relabeled;
    for (int a : comp.off_actives) relabeled.push_back(pos[a]);
    // sort order of the off variables may change under relabeling
    std::vector<int> order(relabeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return relabeled[i] < relabeled[j]; });
    std::vector<int> sorted;
    for (int i : order) sorted.push_back(relabeled[i]);
    auto permute = [&](std::vector<std::vector<int>>& idx, bool has_diag) {
      for (auto& mi : idx) {
        std::vector<int> out(mi.size());
        for (size_t i = 0; i < order.size(); ++i) out[i] = mi[order[i]];
        if (has_diag) out.back() = mi.back();
        mi = out;
      }
    };
    permute(comp.a_indices, false);
    permute(comp.b_indices, true);
    comp.off_actives = sorted;
    comp.output = k + 1;
  }
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_point(dim, gen);
    Eigen::VectorXd qx(dim);
    for (int j = 0; j < dim; ++j) qx[j] = x[m.perm[j] - 1];
    const auto ly = lower.evaluate(qx);
    Eigen::VectorXd y(dim);
    for (int j = 0; j < dim; ++j) y[m.perm[j] - 1] = ly[j];
    CHECK((m.evaluate(x) - y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("embed: identity outside, log-det carried through") {
  std::mt19937_64 gen(3);
  const auto inner = random_map(2, 2, gen);
  const auto member = embed(inner, 5, {2, 3});
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = random_point(5, gen);
    const auto y = member.evaluate(x);
    CHECK(y[0] == x[0]);
    CHECK(y[3] == x[3]);
    CHECK(y[4] == x[4]);
    Eigen::VectorXd xi(2);
    xi << x[1], x[2];
    const auto yi = inner.evaluate(xi);
    CHECK(y[1] == doctest::Approx(yi[0]).epsilon(1e-14));
    CHECK(y[2] == doctest::Approx(yi[1]).epsilon(1e-14));
    CHECK(member.log_det(x) ==
          doctest::Approx(inner.log_det_jacobian(xi)).epsilon(1e-13));
  }
}

TEST_CASE("composition of affine members") {
  AffineMap f;  // 2x + 1
  f.L = Eigen::MatrixXd::Constant(1, 1, 2.0);
  f.c = Eigen::VectorXd::Constant(1, 1.0);
  AffineMap g;  // 3x
  g.L = Eigen::MatrixXd::Constant(1, 1, 3.0);
  g.c = Eigen::VectorXd::Zero(1);
  MapComposition comp;
  comp.dim = 1;
  comp.members = {embed(f, 1, {1}), embed(g, 1, {1})};
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(comp.evaluate(x)[0] == doctest::Approx(6 * 0.7 + 1).epsilon(1e-14));
  CHECK(comp.log_det(x) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  MapComposition ids;
  ids.dim = 2;
  ids.members = {embed(identity_map(2), 2, {1, 2}),
                 embed(identity_map(2), 2, {1, 2})};
  const Eigen::Vector2d p(0.3, -1.2);
  CHECK((ids.evaluate(p) - p).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pullback and pushforward round trip") {
  std::mt19937_64 gen(8);
  const auto m = random_map(3, 2, gen);
  const auto eta = standard_normal_density(3);
  const auto push = pushforward_logdensity(m, eta);
  const auto back = pullback_logdensity(m, push);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_point(3, gen, 1.0);
    CHECK(back(x) == doctest::Approx(eta(x)).epsilon(1e-7));
  }
  // affine special case: pushforward of N(0,1) through mu + sigma x
  auto a = make_template(1, {1}, 1, {}, Rectifier::exp_rect);
  Eigen::VectorXd c = a.coefficients();
  c.setZero();
  c[0] = 0.4;
  c[int(a.comps[0].a.size())] = std::log(1.7);
  a.set_coefficients(c);
  const auto pa = pushforward_logdensity(a, standard_normal_density(1));
  for (double z : {-1.0, 0.2, 2.5}) {
    Eigen::VectorXd v(1);
    v << z;
    const double expect = -0.5 * std::log(2 * M_PI) - std::log(1.7) -
                          0.5 * std::pow((z - 0.4) / 1.7, 2);
    CHECK(pa(v) == doctest::Approx(expect).epsilon(1e-9));
  }
}
