#pragma once

#include "kppbbm/bbm.hpp"
#include "kppbbm/constants.hpp"
#include "kppbbm/profile.hpp"
#include "kppbbm/rinfinity.hpp"
#include "kppbbm/shift.hpp"
#include "kppbbm/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kppbbm {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

class WaveSolution;

// JSON values keyed by the SHA-256 of a canonical key document. An empty
// directory disables caching.
class DiskCache {
public:
    explicit DiskCache(std::string dir = {}) : dir_(std::move(dir)) {}
    bool enabled() const { return !dir_.empty(); }
    std::optional<nlohmann::json> get(const nlohmann::json& key) const;
    void put(const nlohmann::json& key, const nlohmann::json& value) const;
    nlohmann::json get_or(const nlohmann::json& key, const std::function<nlohmann::json()>& compute) const;

private:
    std::string path_for(const nlohmann::json& key) const;
    std::string dir_;
};

struct ExperimentContext {
    int threads = 0;
    double h = 0.01;            // PDE reference grid
    DiskCache cache;
};

struct ExperimentResult {
    std::string name;
    nlohmann::json summary;     // includes "passed" and "provenance"
    std::vector<std::pair<std::string, std::string>> csv;   // file name, content
    bool passed = false;
};

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_hashes;
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> output_hashes;
    double wall_seconds = 0.0;
    std::string started, finished;

    nlohmann::json to_json() const;
};

// Writes every CSV, summary.json and manifest.json under out_dir atomically.
std::vector<std::string> persist(RunManifest manifest, const ExperimentResult& result, const std::string& out_dir);

// Missing provenance keys of an experiment summary; empty when complete.
std::vector<std::string> audit_provenance(const nlohmann::json& summary);

// P[max > x] against u(t,x) with Heaviside data.
ExperimentResult mckean_check(double t, const std::vector<double>& x_grid, std::size_t replicas, std::uint64_t seed,
                              const ExperimentContext& ctx);

struct DualityOptions {
    std::vector<double> trend_times{4.0, 8.0, 12.0};
    double limit_T = 500.0;     // Bramson run for s_hat[psi_hat]; 0 skips the limit
    double limit_h = 0.02;
};

// E exp(-X_t(psi)) against 1 - u(t, m(t)) with data 1 - e^{-psi}.
ExperimentResult duality_check(const InitialProfile& psi, double t, std::size_t replicas, std::uint64_t seed,
                               const ExperimentContext& ctx, const WaveSolution* wave = nullptr,
                               const DualityOptions& opts = {});

struct ShiftExpansionOptions {
    RInfOptions rinf;
    double covariance_shift = 0.0;   // nonzero: rerun with phi(. - L) and compare x_eps - L
};

ExperimentResult shift_expansion_experiment(const InitialProfile& profile, const std::vector<double>& ell_list,
                                            const ExpansionConstants& consts, const ExperimentContext& ctx,
                                            const ShiftExpansionOptions& opts = {});

// Direct and selfsimilar shift at one eps, with the shift-covariance check.
struct ShiftRoutesOptions {
    double h = 0.02;
    double T = 2000.0;
    double covariance_shift = 2.0;
    ShiftOptions shift;
    RInfOptions rinf;
};

ExperimentResult shift_routes_experiment(const InitialProfile& profile, double eps, const WaveSolution& wave,
                                         const ExperimentContext& ctx, const ShiftRoutesOptions& opts = {});

ExperimentResult martingale_suite(const std::vector<double>& t_list, std::size_t replicas, std::uint64_t seed,
                                  const ExperimentContext& ctx);

// Rescaled extremal measures at finite t: Y_n((-inf,0]) / Z_t against mu((-inf,0]).
ExperimentResult extremal_rescaled(double t, const std::vector<double>& n_list, std::size_t replicas,
                                   std::uint64_t seed, const ExpansionConstants& consts, const ExperimentContext& ctx,
                                   const std::vector<double>& lambdas = {0.5, 1.0, 2.0});

// RInfinityEstimate through the cache.
RInfinityEstimate cached_r_infinity(double ell, const InitialProfile& profile, const RInfOptions& opts,
                                    const DiskCache& cache);

} // namespace kppbbm
