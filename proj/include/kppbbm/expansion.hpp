#pragma once

#include "kppbbm/constants.hpp"
#include "kppbbm/profile.hpp"

namespace kppbbm {

class WaveSolution;

// x log x with the continuous value 0 at x = 0.
double xlogx(double x);

// log eps^{-1} - log log eps^{-1} - log cbar
double eval_prop11(double eps, const ExpansionConstants& c);

// eval_prop11 - 2 log log eps^{-1} / log eps^{-1} - (m1 - log cbar + cbar1/cbar) / log eps^{-1}
double eval_thm13(double eps, const ExpansionConstants& c);

// cbar ell + 2 cbar log ell + m1 cbar + cbar1 - cbar log cbar
double eval_prop33(double ell, const ExpansionConstants& c);

// Constants of phi(. - L) and of lambda phi, derived from those of phi.
ExpansionConstants shifted_constants(const ExpansionConstants& c, double L);
ExpansionConstants scaled_constants(const ExpansionConstants& c, double lambda);

// 1 - U(y)
double laplace_wave_dual(double y, const WaveSolution& wave);
// 1 - U(s_hat[psi_hat]); 1 for a zero test function
double laplace_extremal(const InitialProfile& psi, double shift_of_psi_hat, const WaveSolution& wave);

// exp{Z mu lambda log lambda + lambda Z mu log mu - lambda Z (m1 mu + nu)}, mu, nu from phi0
double laplace_fluctuation_target(double lambda, const InitialProfile& phi0, double Z, const ExpansionConstants& c);
// Same with mu, nu given.
double laplace_fluctuation_target(double lambda, double mu, double nu, double Z, double m1);

// E exp(-lambda R_t) = exp(t lambda log lambda)
double laplace_stable(double lambda, double t);

// log(1 + 2 log n / n)
double e_n(double n);

} // namespace kppbbm
