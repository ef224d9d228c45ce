#pragma once

#include <string>
#include <vector>

namespace kppbbm {

// zeta_tau = zeta'' + (eta/2) zeta' + zeta - k e^{-tau/2} zeta' on [0, B], zeta(0) = zeta(B) = 0.
// Fourth-order centered differences with odd reflection at eta = 0.
struct LinearDirichletReport {
    double h = 0.0, B = 0.0, T = 0.0;
    double steady_drift = 0.0;        // max |zeta(T) - zeta(0)| / T from eta e^{-eta^2/4}
    double steady_rate = 0.0;         // max |L_h zeta(T)| at the end of the run
    double moment_initial = 0.0, moment_final = 0.0;
    double moment_drift = 0.0;        // |M(T) - M(0)| / |M(0)| / T
    double k = 1.5;
    double lemma_residual = 0.0;      // max over tau of the Q_k identity defect
    double lemma_residual_half = 0.0; // same at h/2
    double lemma_ratio = 0.0;         // lemma_residual / lemma_residual_half
    std::vector<double> tau;
    std::vector<double> lemma_series;
};

LinearDirichletReport linear_dirichlet_diagnostics(double h, double T, double B = 12.0);

std::string linear_dirichlet_json(const LinearDirichletReport& r);

} // namespace kppbbm
