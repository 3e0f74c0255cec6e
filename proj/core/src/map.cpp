#include <lowdim/map.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>
#include <json.hpp>

#include <lowdim/quadrature.hpp>

namespace lowdim {

std::string rectifier_name(Rectifier r) {
  return r == Rectifier::shifted_square ? "shifted-square" : "exp";
}

Rectifier rectifier_from_name(const std::string& s) {
  if (s == "shifted-square") return Rectifier::shifted_square;
  if (s == "exp") return Rectifier::exp_rect;
  throw std::invalid_argument("unknown rectifier: " + s);
}

double rectify(Rectifier r, double u, double eps) {
  if (r == Rectifier::shifted_square) return u * u + eps;
  if (u > 700.0) throw std::overflow_error("rectify: exp overflow");
  return std::exp(u);
}

double rectify_deriv(Rectifier r, double u) {
  if (r == Rectifier::shifted_square) return 2.0 * u;
  if (u > 700.0) throw std::overflow_error("rectify: exp overflow");
  return std::exp(u);
}

double rectify_unit_preimage(Rectifier r, double eps) {
  if (r == Rectifier::shifted_square) return std::sqrt(1.0 - eps);
  return 0.0;
}

namespace {

const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gl_rule() {
  static const auto rule = gauss_legendre_01(kGaussLegendreOrder);
  return rule;
}

struct ComponentContext {
  // per b-index product of the off-diagonal basis factors at the given point
  Eigen::VectorXd boff;
  // per a-index full product
  Eigen::VectorXd apsi;
  double xd = 0.0;
};

ComponentContext make_context(const MonotoneTriangularMap& m, const MapComponent& c,
                              const Eigen::VectorXd& x) {
  ComponentContext ctx;
  const int v = static_cast<int>(c.off_actives.size());
  Eigen::VectorXd xo(v);
  for (int j = 0; j < v; ++j) xo[j] = x[c.off_actives[j] - 1];
  ctx.xd = x[c.output - 1];
  ctx.apsi.resize(c.a_indices.size());
  for (size_t i = 0; i < c.a_indices.size(); ++i) {
    double p = 1.0;
    for (int j = 0; j < v; ++j)
      p *= basis_eval(m.offdiag_family, c.a_indices[i][j], xo[j]);
    ctx.apsi[i] = p;
  }
  ctx.boff.resize(c.b_indices.size());
  for (size_t i = 0; i < c.b_indices.size(); ++i) {
    double p = 1.0;
    for (int j = 0; j < v; ++j)
      p *= basis_eval(m.offdiag_family, c.b_indices[i][j], xo[j]);
    ctx.boff[i] = p;
  }
  return ctx;
}

double b_at(const MonotoneTriangularMap& m, const MapComponent& c,
            const ComponentContext& ctx, double t) {
  const int v = static_cast<int>(c.off_actives.size());
  double s = 0.0;
  for (size_t i = 0; i < c.b_indices.size(); ++i)
    s += c.b[i] * ctx.boff[i] * basis_eval(m.diag_family, c.b_indices[i][v], t);
  return s;
}

double integral_term(const MonotoneTriangularMap& m, const MapComponent& c,
                     const ComponentContext& ctx, double upper) {
  const auto& [glx, glw] = gl_rule();
  double s = 0.0;
  for (int q = 0; q < glx.size(); ++q)
    s += glw[q] * rectify(m.rectifier, b_at(m, c, ctx, upper * glx[q]), m.eps);
  return upper * s;
}

double component_value_impl(const MonotoneTriangularMap& m, const MapComponent& c,
                            const ComponentContext& ctx) {
  double val = 0.0;
  for (size_t i = 0; i < c.a_indices.size(); ++i) val += c.a[i] * ctx.apsi[i];
  return val + integral_term(m, c, ctx, ctx.xd);
}

}  // namespace

Eigen::VectorXd MonotoneTriangularMap::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != dim) throw std::invalid_argument("evaluate: dimension mismatch");
  Eigen::VectorXd y = x;
  for (size_t k = 0; k < comps.size(); ++k)
    y[comps[k].output - 1] = component_value(static_cast<int>(k), x);
  return y;
}

double MonotoneTriangularMap::component_value(int k, const Eigen::VectorXd& x) const {
  const MapComponent& c = comps[k];
  return component_value_impl(*this, c, make_context(*this, c, x));
}

double MonotoneTriangularMap::component_diag_deriv(int k,
                                                   const Eigen::VectorXd& x) const {
  const MapComponent& c = comps[k];
  const auto ctx = make_context(*this, c, x);
  return rectify(rectifier, b_at(*this, c, ctx, ctx.xd), eps);
}

Eigen::MatrixXd MonotoneTriangularMap::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != dim) throw std::invalid_argument("jacobian: dimension mismatch");
  const auto& [glx, glw] = gl_rule();
  const int nq = static_cast<int>(glx.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  for (const MapComponent& c : comps) {
    const int v = static_cast<int>(c.off_actives.size());
    const int row = c.output - 1;
    Eigen::VectorXd xo(v);
    for (int j = 0; j < v; ++j) xo[j] = x[c.off_actives[j] - 1];
    const double xd = x[c.output - 1];
    const auto ctx = make_context(*this, c, x);

    // diagonal entry
    J(row, row) = rectify(rectifier, b_at(*this, c, ctx, xd), eps);

    if (v == 0) continue;
    // rect'(b) at the quadrature nodes of [0, xd]
    Eigen::VectorXd rp(nq), bq(nq);
    for (int q = 0; q < nq; ++q) {
      bq[q] = b_at(*this, c, ctx, xd * glx[q]);
      rp[q] = rectify_deriv(rectifier, bq[q]);
    }
    for (int j = 0; j < v; ++j) {
      const int col = c.off_actives[j] - 1;
      double da = 0.0;
      for (size_t i = 0; i < c.a_indices.size(); ++i) {
        double p = basis_deriv(offdiag_family, c.a_indices[i][j], xo[j]);
        for (int l = 0; l < v; ++l)
          if (l != j) p *= basis_eval(offdiag_family, c.a_indices[i][l], xo[l]);
        da += c.a[i] * p;
      }
      // d/dx_j of the b expansion, per quadrature node
      double dint = 0.0;
      for (int q = 0; q < nq; ++q) {
        double db = 0.0;
        for (size_t i = 0; i < c.b_indices.size(); ++i) {
          double p = basis_deriv(offdiag_family, c.b_indices[i][j], xo[j]);
          for (int l = 0; l < v; ++l)
            if (l != j) p *= basis_eval(offdiag_family, c.b_indices[i][l], xo[l]);
          db += c.b[i] * p * basis_eval(diag_family, c.b_indices[i][v], xd * glx[q]);
        }
        dint += glw[q] * rp[q] * db;
      }
      J(row, col) = da + xd * dint;
    }
  }
  return J;
}

double MonotoneTriangularMap::log_det_jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != dim)
    throw std::invalid_argument("log_det_jacobian: dimension mismatch");
  double s = 0.0;
  for (size_t k = 0; k < comps.size(); ++k)
    s += std::log(component_diag_deriv(static_cast<int>(k), x));
  return s;
}

Eigen::VectorXd MonotoneTriangularMap::invert(const Eigen::VectorXd& y) const {
  if (y.size() != dim) throw std::invalid_argument("invert: dimension mismatch");
  Eigen::VectorXd x = y;
  for (size_t k = 0; k < comps.size(); ++k) {
    const MapComponent& c = comps[k];
    const double target = y[c.output - 1];
    Eigen::VectorXd probe = x;
    probe[c.output - 1] = 0.0;
    const auto ctx = make_context(*this, c, probe);
    auto f = [&](double xi) {
      double base = 0.0;
      for (size_t i = 0; i < c.a_indices.size(); ++i) base += c.a[i] * ctx.apsi[i];
      return base + integral_term(*this, c, ctx, xi);
    };
    const double f0 = f(0.0);
    double lo = 0.0, hi = 0.0, flo = f0, fhi = f0;
    if (target >= f0) {
      hi = 1.0;
      fhi = f(hi);
      int doublings = 0;
      while (fhi < target) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
        if (++doublings > kInvertMaxDoublings)
          throw std::runtime_error("invert: bracket expansion failed");
      }
    } else {
      lo = -1.0;
      flo = f(lo);
      int doublings = 0;
      while (flo > target) {
        hi = lo;
        fhi = flo;
        lo *= 2.0;
        flo = f(lo);
        if (++doublings > kInvertMaxDoublings)
          throw std::runtime_error("invert: bracket expansion failed");
      }
    }
    double xi = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double fx = f(xi) - target;
      const double slope = rectify(rectifier, b_at(*this, c, ctx, xi), eps);
      // scale the value tolerance by the local slope so flat components
      // still resolve the preimage itself to ~1e-10
      if (std::abs(fx) <= kInvertValueTol * std::min(1.0, slope)) break;
      if (fx > 0.0)
        hi = xi;
      else
        lo = xi;
      double next = xi - fx / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      xi = next;
    }
    x[c.output - 1] = xi;
  }
  // full-system Newton polish: the component sweep can leave amplified
  // errors behind nearly flat diagonal slopes
  for (int it = 0; it < 3; ++it) {
    const Eigen::VectorXd r = evaluate(x) - y;
    const double rn = r.cwiseAbs().maxCoeff();
    if (rn <= 1e-13) break;
    const Eigen::VectorXd cand = x - jacobian(x).partialPivLu().solve(r);
    if (!cand.allFinite()) break;
    if ((evaluate(cand) - y).cwiseAbs().maxCoeff() >= rn) break;
    x = cand;
  }
  return x;
}

double MonotoneTriangularMap::component_value_cgrad(int k, const Eigen::VectorXd& x,
                                                    Eigen::VectorXd& grad) const {
  const MapComponent& c = comps[k];
  const auto ctx = make_context(*this, c, x);
  const int na = static_cast<int>(c.a.size());
  const int nb = static_cast<int>(c.b.size());
  const int v = static_cast<int>(c.off_actives.size());
  grad.setZero(na + nb);
  double val = 0.0;
  for (int i = 0; i < na; ++i) {
    val += c.a[i] * ctx.apsi[i];
    grad[i] = ctx.apsi[i];
  }
  const auto& [glx, glw] = gl_rule();
  double integral = 0.0;
  for (int q = 0; q < glx.size(); ++q) {
    const double t = ctx.xd * glx[q];
    const double bq = b_at(*this, c, ctx, t);
    integral += glw[q] * rectify(rectifier, bq, eps);
    const double rp = glw[q] * rectify_deriv(rectifier, bq);
    for (int j = 0; j < nb; ++j)
      grad[na + j] += rp * ctx.boff[j] * basis_eval(diag_family, c.b_indices[j][v], t);
  }
  grad.segment(na, nb) *= ctx.xd;
  return val + ctx.xd * integral;
}

double MonotoneTriangularMap::component_logdet_cgrad(int k, const Eigen::VectorXd& x,
                                                     Eigen::VectorXd& grad) const {
  const MapComponent& c = comps[k];
  const auto ctx = make_context(*this, c, x);
  const int na = static_cast<int>(c.a.size());
  const int nb = static_cast<int>(c.b.size());
  const int v = static_cast<int>(c.off_actives.size());
  grad.setZero(na + nb);
  const double bd = b_at(*this, c, ctx, ctx.xd);
  const double r = rectify(rectifier, bd, eps);
  const double ratio = rectify_deriv(rectifier, bd) / r;
  for (int j = 0; j < nb; ++j)
    grad[na + j] =
        ratio * ctx.boff[j] * basis_eval(diag_family, c.b_indices[j][v], ctx.xd);
  return std::log(r);
}

int MonotoneTriangularMap::n_coeffs() const {
  int n = 0;
  for (const auto& c : comps)
    n += static_cast<int>(c.a.size() + c.b.size());
  return n;
}

Eigen::VectorXd MonotoneTriangularMap::coefficients() const {
  Eigen::VectorXd out(n_coeffs());
  int pos = 0;
  for (const auto& c : comps) {
    out.segment(pos, c.a.size()) = c.a;
    pos += static_cast<int>(c.a.size());
    out.segment(pos, c.b.size()) = c.b;
    pos += static_cast<int>(c.b.size());
  }
  return out;
}

void MonotoneTriangularMap::set_coefficients(const Eigen::VectorXd& v) {
  if (v.size() != n_coeffs())
    throw std::invalid_argument("set_coefficients: size mismatch");
  int pos = 0;
  for (auto& c : comps) {
    c.a = v.segment(pos, c.a.size());
    pos += static_cast<int>(c.a.size());
    c.b = v.segment(pos, c.b.size());
    pos += static_cast<int>(c.b.size());
  }
}

void MonotoneTriangularMap::init_identity() {
  const double u = rectify_unit_preimage(rectifier, eps);
  for (auto& c : comps) {
    c.a.setZero();
    c.b.setZero();
    c.b[0] = u;  // all-zero multi-index is first in graded order
  }
}

bool MonotoneTriangularMap::structurally_equal(const MonotoneTriangularMap& o) const {
  if (dim != o.dim || perm != o.perm || rectifier != o.rectifier ||
      offdiag_family != o.offdiag_family || diag_family != o.diag_family ||
      comps.size() != o.comps.size())
    return false;
  for (size_t k = 0; k < comps.size(); ++k) {
    if (comps[k].output != o.comps[k].output ||
        comps[k].off_actives != o.comps[k].off_actives ||
        comps[k].a_indices != o.comps[k].a_indices ||
        comps[k].b_indices != o.comps[k].b_indices)
      return false;
  }
  return true;
}

MonotoneTriangularMap make_template(int dim, const std::vector<int>& perm,
                                    int degree,
                                    const std::vector<std::vector<int>>& actives,
                                    Rectifier rect, BasisFamily offdiag,
                                    BasisFamily diag) {
  if (static_cast<int>(perm.size()) != dim)
    throw std::invalid_argument("make_template: bad permutation size");
  std::vector<bool> seen(dim, false);
  for (int v : perm) {
    if (v < 1 || v > dim || seen[v - 1])
      throw std::invalid_argument("make_template: invalid permutation");
    seen[v - 1] = true;
  }
  if (!actives.empty() && static_cast<int>(actives.size()) != dim)
    throw std::invalid_argument("make_template: actives size mismatch");

  MonotoneTriangularMap m;
  m.dim = dim;
  m.perm = perm;
  m.rectifier = rect;
  m.offdiag_family = offdiag;
  m.diag_family = diag;
  m.comps.resize(dim);
  for (int k = 0; k < dim; ++k) {
    MapComponent& c = m.comps[k];
    c.output = perm[k];
    std::vector<int> act;
    if (actives.empty()) {
      act.assign(perm.begin(), perm.begin() + k + 1);
    } else {
      act = actives[k];
      std::set<int> prefix(perm.begin(), perm.begin() + k + 1);
      bool has_diag = false;
      for (int v : act) {
        if (!prefix.count(v))
          throw std::invalid_argument("make_template: active outside sigma prefix");
        if (v == c.output) has_diag = true;
      }
      if (!has_diag)
        throw std::invalid_argument("make_template: diagonal must be active");
    }
    for (int v : act)
      if (v != c.output) c.off_actives.push_back(v);
    std::sort(c.off_actives.begin(), c.off_actives.end());
    const int v = static_cast<int>(c.off_actives.size());
    c.a_indices = total_degree_indices(v, degree);
    c.b_indices = total_degree_indices(v + 1, degree);
    c.a = Eigen::VectorXd::Zero(c.a_indices.size());
    c.b = Eigen::VectorXd::Zero(c.b_indices.size());
  }
  m.init_identity();
  return m;
}

MonotoneTriangularMap identity_map(int dim) {
  std::vector<int> perm(dim);
  for (int i = 0; i < dim; ++i) perm[i] = i + 1;
  return make_template(dim, perm, 0);
}

LogDensity pullback_logdensity(const MonotoneTriangularMap& m,
                               const LogDensity& logpi) {
  if (m.dim != logpi.dim)
    throw std::invalid_argument("pullback_logdensity: dimension mismatch");
  auto mp = std::make_shared<const MonotoneTriangularMap>(m);
  LogDensity out;
  out.dim = m.dim;
  out.eval = [mp, logpi](const Eigen::VectorXd& x) {
    return logpi.eval(mp->evaluate(x)) + mp->log_det_jacobian(x);
  };
  return out;
}

LogDensity pushforward_logdensity(const MonotoneTriangularMap& m,
                                  const LogDensity& logeta) {
  if (m.dim != logeta.dim)
    throw std::invalid_argument("pushforward_logdensity: dimension mismatch");
  auto mp = std::make_shared<const MonotoneTriangularMap>(m);
  LogDensity out;
  out.dim = m.dim;
  out.eval = [mp, logeta](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = mp->invert(z);
    return logeta.eval(x) - mp->log_det_jacobian(x);
  };
  return out;
}

// ---- serialization ----

using nlohmann::json;

std::string map_to_json_string(const MonotoneTriangularMap& m) {
  json j;
  j["dim"] = m.dim;
  j["perm"] = m.perm;
  j["rectifier"] = rectifier_name(m.rectifier);
  j["eps"] = m.eps;
  j["offdiag_family"] = basis_family_name(m.offdiag_family);
  j["diag_family"] = basis_family_name(m.diag_family);
  json comps = json::array();
  for (const auto& c : m.comps) {
    json jc;
    jc["output"] = c.output;
    jc["off_actives"] = c.off_actives;
    jc["a_indices"] = c.a_indices;
    jc["b_indices"] = c.b_indices;
    jc["a"] = std::vector<double>(c.a.data(), c.a.data() + c.a.size());
    jc["b"] = std::vector<double>(c.b.data(), c.b.data() + c.b.size());
    comps.push_back(std::move(jc));
  }
  j["components"] = std::move(comps);
  return j.dump(2);
}

MonotoneTriangularMap map_from_json_string(const std::string& s) {
  const json j = json::parse(s);
  MonotoneTriangularMap m;
  m.dim = j.at("dim").get<int>();
  m.perm = j.at("perm").get<std::vector<int>>();
  m.rectifier = rectifier_from_name(j.at("rectifier").get<std::string>());
  m.eps = j.at("eps").get<double>();
  m.offdiag_family = basis_family_from_name(j.at("offdiag_family").get<std::string>());
  m.diag_family = basis_family_from_name(j.at("diag_family").get<std::string>());
  for (const auto& jc : j.at("components")) {
    MapComponent c;
    c.output = jc.at("output").get<int>();
    c.off_actives = jc.at("off_actives").get<std::vector<int>>();
    c.a_indices = jc.at("a_indices").get<std::vector<std::vector<int>>>();
    c.b_indices = jc.at("b_indices").get<std::vector<std::vector<int>>>();
    const auto av = jc.at("a").get<std::vector<double>>();
    const auto bv = jc.at("b").get<std::vector<double>>();
    c.a = Eigen::Map<const Eigen::VectorXd>(av.data(), av.size());
    c.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), bv.size());
    m.comps.push_back(std::move(c));
  }
  return m;
}

void save_map(const MonotoneTriangularMap& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write map file: " + path);
  out << map_to_json_string(m) << "\n";
}

MonotoneTriangularMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read map file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return map_from_json_string(ss.str());
}

// ---- composition ----

double AffineMap::log_abs_det() const {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  double s = 0.0;
  for (int i = 0; i < L.rows(); ++i)
    s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

Eigen::VectorXd AffineMap::invert(const Eigen::VectorXd& y) const {
  return L.partialPivLu().solve(y - c);
}

Eigen::VectorXd CompositionMember::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd sub(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) sub[i] = x[coords[i] - 1];
  const Eigen::VectorXd mapped = tri ? tri->evaluate(sub) : affine->evaluate(sub);
  Eigen::VectorXd out = x;
  for (size_t i = 0; i < coords.size(); ++i) out[coords[i] - 1] = mapped[i];
  return out;
}

double CompositionMember::log_det(const Eigen::VectorXd& x) const {
  if (affine) return affine->log_abs_det();
  Eigen::VectorXd sub(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) sub[i] = x[coords[i] - 1];
  return tri->log_det_jacobian(sub);
}

namespace {
void check_embed(int inner_dim, int ambient_dim, const std::vector<int>& coords) {
  if (static_cast<int>(coords.size()) != inner_dim)
    throw std::invalid_argument("embed: coords size != inner dimension");
  std::set<int> seen;
  for (int c : coords) {
    if (c < 1 || c > ambient_dim || !seen.insert(c).second)
      throw std::invalid_argument("embed: invalid coordinate list");
  }
}
}  // namespace

CompositionMember embed(MonotoneTriangularMap m, int ambient_dim,
                        std::vector<int> coords) {
  check_embed(m.dim, ambient_dim, coords);
  CompositionMember out;
  out.ambient_dim = ambient_dim;
  out.coords = std::move(coords);
  out.tri = std::make_shared<const MonotoneTriangularMap>(std::move(m));
  return out;
}

CompositionMember embed(AffineMap m, int ambient_dim, std::vector<int> coords) {
  check_embed(static_cast<int>(m.L.rows()), ambient_dim, coords);
  CompositionMember out;
  out.ambient_dim = ambient_dim;
  out.coords = std::move(coords);
  out.affine = std::make_shared<const AffineMap>(std::move(m));
  return out;
}

Eigen::VectorXd MapComposition::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = x;
  for (auto it = members.rbegin(); it != members.rend(); ++it) y = it->evaluate(y);
  return y;
}

double MapComposition::log_det(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = x;
  double s = 0.0;
  for (auto it = members.rbegin(); it != members.rend(); ++it) {
    s += it->log_det(y);
    y = it->evaluate(y);
  }
  return s;
}

}  // namespace lowdim
