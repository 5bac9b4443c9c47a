#pragma once

#include <functional>
#include <vector>

namespace cyltrack::quad {

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over [a, b] to the given
/// absolute tolerance. `breakpoints` seeds the initial subdivision with known
/// features of the integrand (modes, kinks); values outside (a, b) are
/// ignored. Throws std::runtime_error when the error estimate cannot be
/// brought below the tolerance within the subdivision budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, const std::vector<double>& breakpoints = {});

/// Integral of f over [0, inf) via the substitution t = u / (1 - u).
/// `breakpoints` are in t-coordinates.
double integrate_half_line(const std::function<double(double)>& f,
                           double abs_tol,
                           const std::vector<double>& breakpoints = {});

}  // namespace cyltrack::quad
