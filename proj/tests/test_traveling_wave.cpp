#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/errors.hpp"
#include "kppbbm/wave.hpp"

#include <cmath>
#include <vector>

using namespace kppbbm;

namespace {

const WaveSolution& wave_h005()
{
    static const WaveSolution w = normalize_wave(solve_wave(-40.0, 40.0, 0.005, 1e-10));
    return w;
}

const WaveSolution& wave_h01()
{
    static const WaveSolution w = normalize_wave(solve_wave(-40.0, 40.0, 0.01, 1e-10));
    return w;
}

// RK4 for z'' = e^{-x} z^2 with the tail values z = x + k0 at x_start, integrated backward
double shoot_back(double k0, double x_start, double x_end, int n)
{
    double x = x_start, z = x + k0, p = 1.0;
    const double h = (x_end - x_start) / n;
    auto f = [](double xx, double zz) { return std::exp(-xx) * zz * zz; };
    for (int i = 0; i < n; ++i) {
        const double k1z = p, k1p = f(x, z);
        const double k2z = p + 0.5 * h * k1p, k2p = f(x + 0.5 * h, z + 0.5 * h * k1z);
        const double k3z = p + 0.5 * h * k2p, k3p = f(x + 0.5 * h, z + 0.5 * h * k2z);
        const double k4z = p + h * k3p, k4p = f(x + h, z + h * k3z);
        z += h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z);
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        x += h;
    }
    return z;
}

} // namespace

TEST_CASE("shape and boundary values")
{
    const auto& w = wave_h01();
    const auto U = w.U_values();
    CHECK(U.front() - 1.0 > -1e-6);
    CHECK(U.front() - 1.0 <= 0.0);
    for (std::size_t i = 1; i + 1 < U.size(); ++i) {
        REQUIRE(U[i] > 0.0);
        REQUIRE(U[i] < 1.0);
        REQUIRE(U[i] < U[i - 1]);
    }
    CHECK(U.back() <= 1e-6 * w.x_max() * std::exp(-w.x_max()) * 1e6);
    CHECK(w.ode_residual_norm() <= 1e-10);
    CHECK(w.normalized());
}

TEST_CASE("centered residual of the wave equation is O(h^2)")
{
    const auto& w = wave_h01();
    const auto U = w.U_values();
    const double h = w.h();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < U.size(); ++i) {
        const double r = (U[i + 1] - 2 * U[i] + U[i - 1]) / (h * h) + (U[i + 1] - U[i - 1]) / h + U[i] - U[i] * U[i];
        worst = std::max(worst, std::fabs(r));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("tail normalization")
{
    const auto& w = wave_h005();
    CHECK(w.tail_A() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w.k0() == doctest::Approx(w.tail_B()).epsilon(1e-9));
    CHECK(w.tail_fit_residual() <= 1e-4);
    CHECK(w.k0() == doctest::Approx(-1.95242).epsilon(1e-4));
    // independent shooting from the far tail lands on the solved profile
    for (double x : {10.0, 5.0, 2.0}) {
        const double z = shoot_back(w.k0(), 34.0, x, 20000);
        CHECK(w.eval_zbar0(x) == doctest::Approx(z).epsilon(1e-5));
    }
}

TEST_CASE("normalize is idempotent and translation invariant")
{
    const WaveSolution raw = solve_wave(-40.0, 40.0, 0.01, 1e-10);
    const WaveSolution n1 = normalize_wave(raw);
    const WaveSolution n2 = normalize_wave(n1);
    const WaveSolution moved = WaveSolution::from_samples(raw.x_min() - 1.0, raw.h(), raw.U_values());
    const WaveSolution n3 = normalize_wave(moved);
    double d2 = 0.0, d3 = 0.0;
    for (double x = -20.0; x <= 25.0; x += 0.37) {
        d2 = std::max(d2, std::fabs(n2.eval_U(x) - n1.eval_U(x)));
        d3 = std::max(d3, std::fabs(n3.eval_U(x) - n1.eval_U(x)));
    }
    CHECK(d2 <= 1e-8);
    CHECK(d3 <= 1e-6);
    CHECK(n3.k0() == doctest::Approx(n1.k0()).epsilon(1e-6));
}

TEST_CASE("synthetic tail (x + 2) e^{-x}")
{
    const double x0 = -40.0, h = 0.01;
    std::vector<double> U;
    for (int i = 0; i <= 8000; ++i) {
        const double x = x0 + h * i;
        U.push_back(x < -1.0 ? 1.0 : std::min(1.0, (x + 2.0) * std::exp(-x)));
    }
    const WaveSolution n = normalize_wave(WaveSolution::from_samples(x0, h, U));
    CHECK(n.k0() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("evaluation")
{
    const auto& w = wave_h005();
    for (std::size_t i = 0; i < w.size(); i += 997)
        CHECK(w.eval_zbar0(w.x(i)) == doctest::Approx(std::exp(w.x(i)) * w.eval_U(w.x(i))).epsilon(1e-12));
    CHECK(std::fabs(w.eval_zbar0(20.0) - (20.0 + w.k0())) <= 1e-6);
    // 1 - U decays like e^{(sqrt 2 - 1) x} on the left, so zbar0 e^{-x} -> 1 at that rate
    const double r = (std::log(1.0 - w.eval_U(-15.0)) - std::log(1.0 - w.eval_U(-20.0))) / 5.0;
    CHECK(r == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-3));
    CHECK(w.eval_zbar0(-35.0) / std::exp(-35.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(w.eval_zbar0(-15.0) / std::exp(-15.0) < 1.0);
    CHECK(w.eval_U(-100.0) == 1.0);
    CHECK(w.eval_U(60.0) == doctest::Approx((60.0 + w.k0()) * std::exp(-60.0)).epsilon(1e-12));
    CHECK(w.eval_U(w.level_point(0.5)) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("integral identities and their grid convergence")
{
    const auto a = wave_identity_checks(wave_h01());
    const auto b = wave_identity_checks(wave_h005());
    CHECK(b.residual_mass <= 1e-5);
    CHECK(b.residual_first_moment <= 1e-4);
    CHECK(b.mass == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(b.first_moment == doctest::Approx(-wave_h005().k0()).epsilon(1e-4));
    CHECK(a.residual_mass / b.residual_mass >= 4.0);
    CHECK(a.residual_first_moment / b.residual_first_moment >= 4.0);
}

TEST_CASE("G(q)")
{
    const auto& w = wave_h005();
    const auto id = wave_identity_checks(w);
    double C = 0.0;
    for (double q = -5.0; q <= 15.0; q += 1.0) {
        const double g = eval_G(w, q);
        C = std::max(C, std::fabs(g) / (1.0 + std::fabs(q)));
        // the split form differs exactly by the two identity defects
        CHECK(g - eval_G_split(w, q) ==
              doctest::Approx(q * (id.mass - 1.0) + id.first_moment + w.k0()).epsilon(1e-9).scale(1.0));
    }
    CHECK(C <= 3.0);

    // on finer grids the defect vanishes at second order
    const WaveSolution a = normalize_wave(solve_wave(-40.0, 40.0, 0.0025, 1e-8));
    const WaveSolution b = normalize_wave(solve_wave(-40.0, 40.0, 0.00125, 1e-8));
    for (double q : {-3.0, 0.0, 4.0, 10.0}) {
        const double da = eval_G(a, q) - eval_G_split(a, q);
        const double db = eval_G(b, q) - eval_G_split(b, q);
        CHECK(std::fabs((4.0 * db - da) / 3.0) <= 1e-6);
    }
    const double q = 12.0;
    CHECK(std::fabs(eval_G(a, q) - q + a.k0()) <= 2.0 * std::exp(-q));
    CHECK(std::fabs(eval_G(b, q) - q + b.k0()) <= 2.0 * std::exp(-q));
}

TEST_CASE("preconditions")
{
    CHECK_THROWS_AS(solve_wave(-10.0, 40.0, 0.01, 1e-10), UsageError);
    CHECK_THROWS_AS(solve_wave(-40.0, 40.0, 0.05, 1e-10), UsageError);
}
