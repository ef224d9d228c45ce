#pragma once

#include "kppbbm/profile.hpp"

#include <vector>

namespace kppbbm {

class WaveSolution;

// (4 pi)^{-1/2} int x^k e^x phi(x) dx for k = 0, 1.
struct MomentResult {
    double value = 0.0;
    double error = 0.0;
    double lower = 0.0;   // integration range actually used
    double upper = 0.0;
};

MomentResult profile_moment(const InitialProfile& phi, int k, double tol);

double compute_cbar(const InitialProfile& phi, double tol = 1e-12);
double compute_cbar1(const InitialProfile& phi, double tol = 1e-12);
inline double mu_of(const InitialProfile& phi, double tol = 1e-12) { return compute_cbar(phi, tol); }
inline double nu_of(const InitialProfile& phi, double tol = 1e-12) { return compute_cbar1(phi, tol); }

// psibar(eta) = int_0^eta sqrt(pi) erfcx(z/2) dz
double compute_psibar(double eta, double tol = 1e-12);

struct GInfinityResult {
    double value = 0.0;
    double scheme_a = 0.0;     // adaptive Gauss-Kronrod, [1,inf) mapped to (0,1]
    double scheme_b = 0.0;     // Romberg on [0, Z] + asymptotic tail beyond Z
    double error_a = 0.0;
    double error_b = 0.0;
    double truncation_b = 0.0; // Z
    double tail_b = 0.0;       // analytic tail added beyond Z
};

GInfinityResult compute_g_infinity(double tol = 1e-10);

// int_eta^inf (2/z - psibar'(z)) dz by its asymptotic series; eta >= 30.
double psibar_tail_series(double eta);

// Tabulated psibar for bulk evaluation on grids. Cubic Hermite with the exact
// derivative below eta_max, asymptotic 2 log eta + g_inf + tail beyond.
class PsibarTable {
public:
    explicit PsibarTable(double eta_max = 50.0, double step = 0.005);
    double operator()(double eta) const;
    double g_inf() const { return g_inf_; }

private:
    double step_, eta_max_, g_inf_;
    std::vector<double> val_, der_;
};

struct ExpansionConstants {
    double cbar = 0.0;
    double cbar1 = 0.0;
    double g_inf = 0.0;
    double k0 = 0.0;
    double m1 = 0.0;
    double tol = 0.0;
    double lower = 0.0;     // truncation points of the profile integrals
    double upper = 0.0;
    double g_truncation = 0.0;
};

ExpansionConstants assemble_constants(double cbar, double cbar1, double g_inf, double k0);
ExpansionConstants assemble_constants(const InitialProfile& phi, const WaveSolution& wave,
                                      double tol = 1e-10);

} // namespace kppbbm
