#pragma once

#include "kppbbm/constants.hpp"
#include "kppbbm/integrator.hpp"
#include "kppbbm/profile.hpp"

#include <string>
#include <vector>

namespace kppbbm {

class WaveSolution;

struct MomentSample {
    double t = 0.0;
    double tau = 0.0;        // log(t+1)
    double moment = 0.0;     // (4pi)^{-1/2} (t+1)^{-3/2} int_0^inf x z dx
    double moment_q = 0.0;   // same with weight x + (3/2) psibar(x/sqrt(t+1))
    double sink = 0.0;       // S(t), the Q-weighted sink density integrated over x >= 0
    double z0 = 0.0;         // z(t, 0)
};

struct RInfOptions {
    double h = 0.05;
    double A = 25.0;
    double width = 8.0;          // right end at ell + support + width sqrt(T)
    double T = 0.0;              // 0: T_factor * ell^2
    double T_factor = 100.0;
    double plateau_tol = 0.05;
    int samples_per_decade = 24;
    StepControl control{1e-12, 1e-7, 1e-3, 1e100, 1e-12, 3.0};
};

struct RInfinityEstimate {
    double ell = 0.0;
    double value = 0.0;          // extrapolated limit of the plain moment
    bool converged = false;
    double plateau_drift = 0.0;  // |M(T) - M(T/10)| / |M(T)|
    double plateau_tol = 0.0;
    double value_last = 0.0;     // M(T)
    double fit_a = 0.0, fit_b = 0.0;  // M ~ r + a (t+1)^{-1/2} + b (t+1)^{-1}
    double value_q_tail = 0.0;   // M_Q(T) + analytic sink tail beyond T
    std::vector<MomentSample> samples;

    // decomposition accumulators
    double y_integral = 0.0;     // -(4pi)^{-1/2} int_0^T S dt
    double y_tail = 0.0;         // -(4pi)^{-1/2} 2 (T+1) S(T)
    double q_grid0 = 0.0;        // M_Q(0) on the grid
    // error terms of the Q-identity, each with its analytic tail beyond T
    double e1_integral = 0.0, e1_tail = 0.0;   // boundary flux r(tau,0) dQ/deta(tau,0)
    double e2_integral = 0.0, e2_tail = 0.0;   // (9/4) e^{-tau} int psibar' r
    // r - q_grid0 - Y - E1 - E2, zero up to discretization error
    double closure() const
    {
        return value - q_grid0 - (y_integral + y_tail) - (e1_integral + e1_tail) - (e2_integral + e2_tail);
    }

    double h = 0.0, A = 0.0, T = 0.0, x_right = 0.0;
    long steps = 0, rejected = 0;
    double seconds = 0.0;
};

RInfinityEstimate r_infinity(double ell, const InitialProfile& profile, const RInfOptions& opts = {});

struct Decomposition {
    double ell = 0.0;
    double r_inf = 0.0;
    double Q_ell = 0.0;
    double Y_ell = 0.0;
    double E_ell = 0.0;
    double E_direct = 0.0;       // E1 + E2 accumulated along the run
    double closure = 0.0;
    double Q_asymptotic = 0.0;   // cbar ell + 3 cbar log ell + (3/2) g_inf cbar + cbar1
    double Y_asymptotic = 0.0;   // -cbar log ell - cbar log cbar + k0 cbar + cbar/2
};

// Q_ell = (4pi)^{-1/2} int_0^inf (eta + (3/2) psibar(eta)) psi0(eta - ell) d eta by quadrature.
double compute_Q_ell(double ell, const InitialProfile& profile, double tol = 1e-12);

Decomposition decompose_r_infinity(const RInfinityEstimate& rinf, const InitialProfile& profile,
                                   const ExpansionConstants& consts);

struct GaussianProbeSample {
    double t = 0.0;
    double x = 0.0;      // (t+1)^delta
    double z = 0.0;
    double ratio = 0.0;  // z / ((t+1)^delta e^{-ell^2/(4(t+1))})
};

std::vector<GaussianProbeSample> gaussian_factor_probe(double ell, const InitialProfile& profile,
                                                       double delta, const std::vector<double>& t_samples,
                                                       double h = 0.05);

std::string rinf_json(const RInfinityEstimate& r);
RInfinityEstimate rinf_from_json(const std::string& text);

} // namespace kppbbm
