#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/bbm.hpp"
#include "kppbbm/constants.hpp"
#include "kppbbm/errors.hpp"
#include "kppbbm/parallel.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace kppbbm;

namespace {

// mean of f(pop) over replicas, in replica order
template <class F>
Moments over_replicas(double t, std::size_t replicas, std::uint64_t seed, F f, const BBMOptions& opts = {})
{
    std::vector<double> v(replicas);
    parallel_for(replicas, resolve_threads(0), [&](std::size_t r) { v[r] = f(simulate(t, seed, r, opts)); });
    Moments m;
    for (double x : v)
        m.add(x);
    return m;
}

} // namespace

TEST_CASE("Philox4x32-10 known answers")
{
    using C = Philox4x32Ctr;
    CHECK(philox4x32_10(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu})
          == C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u})
          == C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream draws")
{
    PhiloxStream a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.uniform() != c.uniform());

    PhiloxStream s(1, 2);
    Moments n;
    for (int i = 0; i < 200000; ++i)
        n.add(s.normal());
    const double var = n.sumsq / n.count - n.mean() * n.mean();
    CHECK(std::fabs(n.mean()) <= 3.0 / std::sqrt(200000.0));
    CHECK(std::fabs(var - 1.0) <= 3.0 * std::sqrt(2.0 / 200000.0));
}

TEST_CASE("start and regeneration")
{
    const auto p0 = simulate(0.0, 42, 3);
    REQUIRE(p0.n_particles() == 1);
    CHECK(p0.positions[0] == 0.0);
    const auto o = observables(p0);
    CHECK(o.Z_t == 0.0);
    CHECK(o.W_t == 1.0);
    CHECK(o.max_pos == 0.0);
    CHECK(o.m_flagged);

    const auto a = simulate(5.0, 42, 17), b = simulate(5.0, 42, 17), c = simulate(5.0, 43, 17);
    CHECK(a.positions == b.positions);
    CHECK(a.positions != c.positions);

    // same genealogy at every checkpoint
    const auto cps = simulate_checkpoints({2.0, 4.0, 5.0}, 42, 17);
    CHECK(cps.back().n_particles() == a.n_particles());
    CHECK(cps[0].n_particles() == simulate(2.0, 42, 17).n_particles());
    CHECK(cps[0].n_particles() <= cps[1].n_particles());

    CHECK_THROWS_AS(simulate(-1.0, 1, 0), UsageError);
    CHECK_THROWS_AS(simulate_checkpoints({2.0, 1.0}, 1, 0), UsageError);
    BBMOptions tight;
    tight.cap = 100.0;
    CHECK_THROWS_AS(simulate(6.0, 1, 0, tight), NumericError);
    tight.cap = 200.0;
    // e^5 < cap but some realizations overshoot it
    bool hit = false;
    for (std::uint64_t r = 0; r < 200 && !hit; ++r)
        try {
            simulate(5.0, 1, r, tight);
        } catch (const NumericError&) {
            hit = true;
        }
    CHECK(hit);
}

TEST_CASE("lifetimes are Exp(1)")
{
    auto life = ancestral_lifetimes(42, 0, 10000);
    std::sort(life.begin(), life.end());
    double D = 0.0;
    const double n = life.size();
    for (std::size_t i = 0; i < life.size(); ++i) {
        const double F = 1.0 - std::exp(-life[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    CHECK(D <= 1.628 / std::sqrt(n));
}

TEST_CASE("single particle has variance 2t")
{
    BBMOptions nb;
    nb.branching = false;
    const std::size_t R = 20000;
    const auto m = over_replicas(2.0, R, 42, [](const BBMPopulation& p) { return p.positions.at(0); }, nb);
    const double var = (m.sumsq - m.sum * m.mean()) / (R - 1);
    CHECK(std::fabs(var - 4.0) <= 3.0 * 4.0 * std::sqrt(2.0 / (R - 1)));
}

TEST_CASE("first moments against many-to-one")
{
    const double t = 6.0;
    const auto N = over_replicas(t, 10000, 42, [](const BBMPopulation& p) { return double(p.n_particles()); });
    CHECK(std::fabs(N.mean() - std::exp(t)) <= 3.0 * N.std_error());

    const double s = 4.0;
    const auto sq = over_replicas(s, 20000, 42, [](const BBMPopulation& p) {
        double a = 0.0;
        for (double x : p.positions)
            a += x * x;
        return a;
    });
    CHECK(std::fabs(sq.mean() - std::exp(s) * 2.0 * s) <= 3.0 * sq.std_error());
    const auto ex = over_replicas(s, 20000, 42, [](const BBMPopulation& p) {
        double a = 0.0;
        for (double x : p.positions)
            a += std::exp(x / 2.0);
        return a;
    });
    CHECK(std::fabs(ex.mean() - std::exp(1.25 * s)) <= 3.0 * ex.std_error());
}

TEST_CASE("Z and W at t = 6")
{
    std::vector<double> Z(100000), W(100000);
    parallel_for(Z.size(), resolve_threads(0), [&](std::size_t r) {
        ObservableRequest q;
        q.top_k = 0;
        const auto o = observables(simulate(6.0, 42, r), q);
        Z[r] = o.Z_t;
        W[r] = o.W_t;
    });
    const auto z = estimate(Z, 42), w = estimate(W, 42);
    CHECK(std::fabs(z.mean) <= 3.0 * z.std_error);
    CHECK(std::fabs(w.mean - 1.0) <= 3.0 * w.std_error);
    CHECK(z.replicas == 100000);
}

TEST_CASE("observables")
{
    const auto pop = simulate(5.0, 42, 5);
    const auto psi = InitialProfile::box(-1.0, 2.0, 0.5);
    const auto phi0 = InitialProfile::step();
    ObservableRequest q;
    q.psi = &psi;
    q.phi0 = &phi0;
    q.n = 2.0;
    q.Z_for_shift = 1.5;
    q.top_k = 4;
    const auto o = observables(pop, q);

    const double m = 10.0 - 1.5 * std::log(5.0);
    double Z = 0.0, W = 0.0, X = 0.0, Y = 0.0, Ys = 0.0;
    for (double x : pop.positions) {
        Z += (10.0 - x) * std::exp(x - 10.0);
        W += std::exp(x - 10.0);
        X += psi.value(m - x);
        Y += phi0.value(m - x - 2.0);
        Ys += phi0.value(m - x + std::log(1.5) - 2.0);
    }
    CHECK(o.m == doctest::Approx(m));
    CHECK(o.Z_t == doctest::Approx(Z).epsilon(1e-12));
    CHECK(o.W_t == doctest::Approx(W).epsilon(1e-12));
    CHECK(o.W_t > 0.0);
    CHECK(o.X_psi == doctest::Approx(X).epsilon(1e-12));
    CHECK(o.Y_n == doctest::Approx(Y * std::exp(-2.0) / 2.0).epsilon(1e-12));
    const double mu = mu_of(phi0);
    CHECK(o.V_n == doctest::Approx(2.0 * (o.Y_n - (1.0 + std::log(2.0)) * 1.5 * mu)).epsilon(1e-12));
    CHECK(o.has_star);
    CHECK(o.Y_star == doctest::Approx(Ys * std::exp(-2.0) / 2.0).epsilon(1e-12));
    REQUIRE(o.order_stats.size() == std::min<std::size_t>(4, pop.n_particles()));
    CHECK(o.order_stats[0] == o.max_pos);
    CHECK(std::is_sorted(o.order_stats.rbegin(), o.order_stats.rend()));
    CHECK(o.max_pos == *std::max_element(pop.positions.begin(), pop.positions.end()));

    // exchangeability
    auto shuffled = pop;
    std::mt19937_64 g(1);
    std::shuffle(shuffled.positions.begin(), shuffled.positions.end(), g);
    const auto s = observables(shuffled, q);
    CHECK(s.Z_t == doctest::Approx(o.Z_t).epsilon(1e-12));
    CHECK(s.W_t == doctest::Approx(o.W_t).epsilon(1e-12));
    CHECK(s.X_psi == doctest::Approx(o.X_psi).epsilon(1e-12));
    CHECK(s.Y_n == doctest::Approx(o.Y_n).epsilon(1e-12));
    CHECK(s.max_pos == o.max_pos);
    CHECK(s.order_stats == o.order_stats);

    BBMPopulation empty;
    CHECK_THROWS_AS(observables(empty), UsageError);
}

TEST_CASE("empirical Laplace functional")
{
    const auto zero = empirical_laplace_Xt(InitialProfile::zero(), 4.0, 1000, 42);
    CHECK(zero.mean == 1.0);
    CHECK(zero.std_error == 0.0);
    CHECK_THROWS_AS(empirical_laplace_Xt(InitialProfile::box(-1.0, 0.0), 4.0, 0, 42), UsageError);

    const auto psi = InitialProfile::box(-1.0, 0.0);
    const auto one = empirical_laplace_Xt(psi, 4.0, 3000, 42, 1);
    const auto four = empirical_laplace_Xt(psi, 4.0, 3000, 42, 4);
    CHECK(one.mean == four.mean);
    CHECK(one.std_error == four.std_error);

    // a huge psi on (-inf, y] turns the functional into an indicator of the maximum
    const double t = 4.0, y = 1.0;
    const std::size_t R = 5000;
    const auto cut = empirical_laplace_Xt(InitialProfile::box(-1000.0, y, 60.0), t, R, 42);
    const double m = bramson_m(t);
    const auto ind = over_replicas(t, R, 42, [&](const BBMPopulation& p) {
        return m - *std::max_element(p.positions.begin(), p.positions.end()) > y ? 1.0 : 0.0;
    });
    CHECK(std::fabs(cut.mean - ind.mean()) <= std::max(cut.std_error, 1e-12));
}
