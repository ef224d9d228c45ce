#include "kppbbm/bbm.hpp"

#include "kppbbm/constants.hpp"
#include "kppbbm/errors.hpp"
#include "kppbbm/parallel.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace kppbbm {

namespace {

constexpr std::uint64_t kRootTag = 0x6b7070626d6d0001ull;

std::uint64_t root_key(std::uint64_t replica)
{
    return mix64(replica ^ kRootTag);
}

std::uint64_t child_key(std::uint64_t parent, unsigned child)
{
    return mix64(parent * 2 + child + 0x5851F42D4C957F2Dull);
}

struct Segment {
    std::uint64_t key;
    double t0;
    double x0;
    std::size_t cp;   // first checkpoint index with time >= t0
};

} // namespace

std::vector<BBMPopulation> simulate_checkpoints(const std::vector<double>& times, std::uint64_t seed,
                                                std::uint64_t replica, const BBMOptions& opts)
{
    if (times.empty())
        throw UsageError("simulate: no checkpoint times");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1])))
            throw UsageError("simulate: times must be >= 0 and strictly increasing");
    const double T = times.back();
    if (opts.branching && std::exp(T) > opts.cap) {
        std::ostringstream os;
        os << "population cap exceeded: expected e^t = " << std::exp(T) << " > cap " << opts.cap;
        throw NumericError(os.str());
    }
    std::vector<BBMPopulation> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        out[k].t = times[k];
        out[k].seed = seed;
        out[k].replica = replica;
    }
    std::size_t alive_total = 0;
    std::vector<Segment> stack{{root_key(replica), 0.0, 0.0, 0}};
    while (!stack.empty()) {
        const Segment s = stack.back();
        stack.pop_back();
        PhiloxStream rng(seed, s.key);
        const double death = opts.branching ? s.t0 + rng.exponential() : INFINITY;
        double tc = s.t0, x = s.x0;
        std::size_t k = s.cp;
        for (; k < times.size() && times[k] < death; ++k) {
            const double dt = times[k] - tc;
            if (dt > 0.0)
                x += std::sqrt(2.0 * dt) * rng.normal();
            tc = times[k];
            out[k].positions.push_back(x);
        }
        if (death >= T)
            continue;
        x += std::sqrt(2.0 * (death - tc)) * rng.normal();
        if (++alive_total > opts.cap) {
            std::ostringstream os;
            os << "population cap exceeded: more than " << opts.cap << " branchings (e^t = " << std::exp(T) << ")";
            throw NumericError(os.str());
        }
        // second child first so the first child is expanded first
        stack.push_back({child_key(s.key, 1), death, x, k});
        stack.push_back({child_key(s.key, 0), death, x, k});
    }
    return out;
}

BBMPopulation simulate(double t, std::uint64_t seed, std::uint64_t replica, const BBMOptions& opts)
{
    return std::move(simulate_checkpoints({t}, seed, replica, opts).front());
}

std::vector<double> ancestral_lifetimes(std::uint64_t seed, std::uint64_t replica, std::size_t count)
{
    std::vector<double> out;
    out.reserve(count);
    std::uint64_t key = root_key(replica);
    for (std::size_t i = 0; i < count; ++i) {
        PhiloxStream rng(seed, key);
        out.push_back(rng.exponential());
        key = child_key(key, 0);
    }
    return out;
}

ExtremalObservables observables(const BBMPopulation& pop, const ObservableRequest& req)
{
    if (pop.positions.empty())
        throw UsageError("observables: empty population");
    ExtremalObservables o;
    o.t = pop.t;
    o.m = bramson_m(pop.t);
    o.m_flagged = bramson_m_flagged(pop.t);
    o.n_particles = pop.n_particles();
    o.n = req.n;
    const double two_t = 2.0 * pop.t;
    const bool want_y = req.phi0 && req.n > 0.0;
    double y = 0.0, ys = 0.0, xpsi = 0.0;
    double shift = 0.0;
    if (req.Z_for_shift && *req.Z_for_shift > 0.0) {
        o.has_star = true;
        shift = std::log(*req.Z_for_shift);
    }
    o.max_pos = -INFINITY;
    for (double x : pop.positions) {
        const double d = two_t - x;
        const double e = std::exp(-d);
        o.Z_t += d * e;
        o.W_t += e;
        o.max_pos = std::max(o.max_pos, x);
        if (req.psi)
            xpsi += req.psi->value(o.m - x);
        if (want_y) {
            y += req.phi0->value(o.m - x - req.n);
            if (o.has_star)
                ys += req.phi0->value(o.m - x + shift - req.n);
        }
    }
    o.X_psi = xpsi;
    if (req.top_k > 0) {
        const std::size_t k = std::min<std::size_t>(req.top_k, pop.positions.size());
        o.order_stats.assign(pop.positions.begin(), pop.positions.end());
        std::partial_sort(o.order_stats.begin(), o.order_stats.begin() + k, o.order_stats.end(), std::greater<>());
        o.order_stats.resize(k);
    }
    if (want_y) {
        const double norm = std::exp(-req.n) / req.n;
        const double mu = mu_of(*req.phi0);
        const double corr = 1.0 + 2.0 * std::log(req.n) / req.n;
        const double Z = req.Z_for_shift ? *req.Z_for_shift : o.Z_t;
        o.Y_n = norm * y;
        o.V_n = req.n * (o.Y_n - corr * Z * mu);
        if (o.has_star) {
            o.Y_star = norm * ys;
            o.V_star = req.n * (o.Y_star - corr * mu);
        }
    }
    return o;
}

MCEstimate empirical_laplace_Xt(const InitialProfile& psi, double t, std::size_t replicas, std::uint64_t seed,
                                int threads, const BBMOptions& opts)
{
    if (replicas == 0)
        throw UsageError("empirical_laplace_Xt: replicas must be >= 1");
    if (psi.is_zero()) {
        MCEstimate e;
        e.mean = 1.0;
        e.replicas = replicas;
        e.seed = seed;
        return e;
    }
    std::vector<double> v(replicas);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        const BBMPopulation p = simulate(t, seed, r, opts);
        ObservableRequest q;
        q.psi = &psi;
        q.top_k = 0;
        v[r] = std::exp(-observables(p, q).X_psi);
    });
    return estimate(v, seed);
}

} // namespace kppbbm
