#pragma once

#include "kppbbm/profile.hpp"
#include "kppbbm/stats.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace kppbbm {

struct BBMOptions {
    double cap = 2.0e7;      // limit on the expected and the actual particle count
    bool branching = true;   // false: a single Brownian particle (diagnostic)
};

struct BBMPopulation {
    double t = 0.0;
    std::vector<double> positions;   // depth-first genealogical order
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;

    std::size_t n_particles() const { return positions.size(); }
};

// Exact event-driven binary BBM with generator 1/2 * 2 d^2/dx^2 (variance 2t)
// and Exp(1) lifetimes, started from one particle at 0.
BBMPopulation simulate(double t, std::uint64_t seed, std::uint64_t replica, const BBMOptions& opts = {});

// Populations of one realization at several increasing times.
std::vector<BBMPopulation> simulate_checkpoints(const std::vector<double>& times, std::uint64_t seed,
                                                std::uint64_t replica, const BBMOptions& opts = {});

// Lifetimes along the first-child ancestral line of a realization.
std::vector<double> ancestral_lifetimes(std::uint64_t seed, std::uint64_t replica, std::size_t count);

struct ExtremalObservables {
    double t = 0.0;
    double m = 0.0;              // centering 2t - (3/2) log t
    bool m_flagged = false;      // t < 1, centering 2t
    std::size_t n_particles = 0;
    double max_pos = 0.0;
    std::vector<double> order_stats;   // top-k, decreasing
    double Z_t = 0.0;            // sum (2t - x) e^{-(2t - x)}
    double W_t = 0.0;            // sum e^{-(2t - x)}
    double X_psi = 0.0;          // sum psi(m - x)
    double n = 0.0;
    double Y_n = 0.0;            // n^{-1} e^{-n} sum phi0(m - x - n)
    double V_n = 0.0;            // n (Y_n - (1 + 2 log n / n) Z mu(phi0))
    bool has_star = false;
    double Y_star = 0.0;         // positions seen from m shifted by log Z
    double V_star = 0.0;
};

struct ObservableRequest {
    const InitialProfile* psi = nullptr;
    const InitialProfile* phi0 = nullptr;
    double n = 0.0;
    std::optional<double> Z_for_shift;
    int top_k = 10;
};

ExtremalObservables observables(const BBMPopulation& pop, const ObservableRequest& req = {});

// Mean and standard error of exp(-X_t(psi)) over replicas 0..replicas-1.
MCEstimate empirical_laplace_Xt(const InitialProfile& psi, double t, std::size_t replicas, std::uint64_t seed,
                                int threads = 0, const BBMOptions& opts = {});

} // namespace kppbbm
