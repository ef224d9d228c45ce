#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace kppbbm {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;      // estimated absolute error
    int evaluations = 0;
    bool converged = true;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (7/15) on [a,b]; bisects the worst interval until
// the summed error estimate is below max(abs_tol, rel_tol*|I|).
QuadResult integrate_gk(const Integrand& f, double a, double b,
                        double abs_tol, double rel_tol = 0.0, int max_intervals = 4000);

// Semi-infinite [a, inf) through the map x = a + (1-s)/s.
QuadResult integrate_gk_upper(const Integrand& f, double a,
                              double abs_tol, double rel_tol = 0.0, int max_intervals = 4000);

// Composite Simpson with Richardson (Romberg) extrapolation on [a,b].
// Error estimate is the difference between the last two extrapolants.
QuadResult integrate_romberg(const Integrand& f, double a, double b,
                             double abs_tol, int max_levels = 20);

// Trapezoid weights on a uniform grid.
double trapezoid(const std::vector<double>& y, double h);

} // namespace kppbbm
