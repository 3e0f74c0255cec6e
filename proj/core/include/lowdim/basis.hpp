#pragma once

#include <string>
#include <vector>

namespace lowdim {

/// Probabilists' Hermite polynomial He_n.
double hermite_poly(int n, double x);
/// d/dx He_n = n He_{n-1}.
double hermite_poly_deriv(int n, double x);

/// Diagonal-variable family: index 0 is the constant 1; index n >= 1 is
/// He_n(x) exp(-x^2/4).  The constant makes identity/affine maps representable
/// and keeps the rectified slope bounded away from zero in the tails.
double hermite_function(int n, double x);
double hermite_function_deriv(int n, double x);

enum class BasisFamily { hermite_poly, hermite_function, linear };

std::string basis_family_name(BasisFamily f);
BasisFamily basis_family_from_name(const std::string& s);

double basis_eval(BasisFamily f, int n, double x);
double basis_deriv(BasisFamily f, int n, double x);

/// All multi-indices over `nvars` variables with total degree <= degree,
/// in graded lexicographic order (the all-zero index first).
std::vector<std::vector<int>> total_degree_indices(int nvars, int degree);

}  // namespace lowdim
