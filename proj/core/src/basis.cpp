#include <lowdim/basis.hpp>

#include <cmath>
#include <stdexcept>

namespace lowdim {

double hermite_poly(int n, double x) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double hm = 1.0, h = x;
  for (int k = 1; k < n; ++k) {
    const double hn = x * h - static_cast<double>(k) * hm;
    hm = h;
    h = hn;
  }
  return h;
}

double hermite_poly_deriv(int n, double x) {
  if (n == 0) return 0.0;
  return static_cast<double>(n) * hermite_poly(n - 1, x);
}

double hermite_function(int n, double x) {
  if (n == 0) return 1.0;
  return hermite_poly(n, x) * std::exp(-0.25 * x * x);
}

double hermite_function_deriv(int n, double x) {
  if (n == 0) return 0.0;
  const double e = std::exp(-0.25 * x * x);
  return (hermite_poly_deriv(n, x) - 0.5 * x * hermite_poly(n, x)) * e;
}

std::string basis_family_name(BasisFamily f) {
  switch (f) {
    case BasisFamily::hermite_poly: return "hermite-poly";
    case BasisFamily::hermite_function: return "hermite-function";
    case BasisFamily::linear: return "linear";
  }
  throw std::logic_error("basis_family_name");
}

BasisFamily basis_family_from_name(const std::string& s) {
  if (s == "hermite-poly") return BasisFamily::hermite_poly;
  if (s == "hermite-function") return BasisFamily::hermite_function;
  if (s == "linear") return BasisFamily::linear;
  throw std::invalid_argument("unknown basis family: " + s);
}

double basis_eval(BasisFamily f, int n, double x) {
  switch (f) {
    case BasisFamily::hermite_poly: return hermite_poly(n, x);
    case BasisFamily::hermite_function: return hermite_function(n, x);
    case BasisFamily::linear:
      if (n == 0) return 1.0;
      if (n == 1) return x;
      throw std::invalid_argument("linear basis has degree <= 1");
  }
  throw std::logic_error("basis_eval");
}

double basis_deriv(BasisFamily f, int n, double x) {
  switch (f) {
    case BasisFamily::hermite_poly: return hermite_poly_deriv(n, x);
    case BasisFamily::hermite_function: return hermite_function_deriv(n, x);
    case BasisFamily::linear:
      if (n == 0) return 0.0;
      if (n == 1) return 1.0;
      throw std::invalid_argument("linear basis has degree <= 1");
  }
  throw std::logic_error("basis_deriv");
}

namespace {
void extend(std::vector<std::vector<int>>& out, std::vector<int>& cur, int pos,
            int remaining) {
  if (pos == static_cast<int>(cur.size())) {
    out.push_back(cur);
    return;
  }
  for (int d = 0; d <= remaining; ++d) {
    cur[pos] = d;
    extend(out, cur, pos + 1, remaining - d);
  }
}
}  // namespace

std::vector<std::vector<int>> total_degree_indices(int nvars, int degree) {
  std::vector<std::vector<int>> out;
  if (nvars == 0) {
    out.push_back({});
    return out;
  }
  // graded order: enumerate by total degree, lexicographic within each grade
  for (int total = 0; total <= degree; ++total) {
    std::vector<std::vector<int>> grade;
    std::vector<int> cur(nvars, 0);
    extend(grade, cur, 0, total);
    for (auto& idx : grade) {
      int s = 0;
      for (int v : idx) s += v;
      if (s == total) out.push_back(idx);
    }
  }
  return out;
}

}  // namespace lowdim
