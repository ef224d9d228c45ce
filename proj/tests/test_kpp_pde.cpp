#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/banded.hpp"
#include "kppbbm/constants.hpp"
#include "kppbbm/errors.hpp"
#include "kppbbm/expansion.hpp"
#include "kppbbm/fit.hpp"
#include "kppbbm/integrator.hpp"
#include "kppbbm/linear_dirichlet.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/rinfinity.hpp"
#include "kppbbm/shift.hpp"
#include "kppbbm/wave.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace kppbbm;

namespace {

const WaveSolution& wave()
{
    static const WaveSolution w = normalize_wave(solve_wave(-40.0, 40.0, 0.005, 1e-10));
    return w;
}

// y_i' = -(i+1) y_i + y_{i+1}, upper bidiagonal, exact solution by back substitution of exponentials
class Bidiagonal : public MolSystem {
public:
    std::size_t size() const override { return 2; }
    int bandwidth() const override { return 1; }
    void rhs(double, const std::vector<double>& y, std::vector<double>& f) const override
    {
        f.resize(2);
        f[0] = -y[0] + y[1];
        f[1] = -2.0 * y[1];
    }
    void jacobian(double, const std::vector<double>&, BandMatrix& J) const override
    {
        J.zero();
        J(0, 0) = -1.0;
        J(0, 1) = 1.0;
        J(1, 1) = -2.0;
    }
};

Trajectory bramson_run(const InitialProfile& p, double h, double T)
{
    LabOptions o;
    o.frame = Frame::Bramson;
    for (double t = 20.0; t <= T + 1e-9; t += 5.0)
        o.output_times.push_back(t);
    return solve_lab(p, 1.0, h, T, o);
}

double shift_of(const Trajectory& tr, double level = 0.5)
{
    ShiftOptions so;
    so.level = level;
    so.t_start = 20.0;
    return extract_shift_direct(tr, wave(), so).s_hat;
}

} // namespace

TEST_CASE("band LU against a dense solve")
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const std::size_t n = 9;
    BandMatrix A(n, 2);
    std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = (i >= 2 ? i - 2 : 0); j < std::min(n, i + 3); ++j) {
            const double v = d(gen) + (i == j ? 6.0 : 0.0);
            A(i, j) = v;
            dense[i][j] = v;
        }
    std::vector<double> x(n), b(n, 0.0);
    for (auto& v : x)
        v = d(gen);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            b[i] += dense[i][j] * x[j];
    std::vector<double> y;
    A.multiply(x, y);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(y[i] == doctest::Approx(b[i]).epsilon(1e-14));
    A.factorize();
    A.solve(b);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(b[i] == doctest::Approx(x[i]).epsilon(1e-12));

    std::vector<double> sub{0.0, 1.0, 1.0}, diag{4.0, 4.0, 4.0}, sup{1.0, 1.0, 0.0}, rhs{5.0, 6.0, 5.0};
    solve_tridiagonal(sub, diag, sup, rhs);
    for (double v : rhs)
        CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("TR-BDF2 on a linear system with a closed form")
{
    Bidiagonal sys;
    TrBdf2 integ(sys, StepControl{1e-12, 1e-9, 1e-3, 1.0, 1e-14, 3.0});
    std::vector<double> y{1.0, 1.0};
    double t = 0.0;
    integ.advance(t, y, 3.0);
    CHECK(t == 3.0);
    // y1 = e^{-2t}, y0 = 2 e^{-t} - e^{-2t}
    CHECK(y[1] == doctest::Approx(std::exp(-6.0)).epsilon(1e-6));
    CHECK(y[0] == doctest::Approx(2.0 * std::exp(-3.0) - std::exp(-6.0)).epsilon(1e-6));
    CHECK(integ.stats().accepted > 0);
}

TEST_CASE("centering m(t)")
{
    CHECK(bramson_m(10.0) == doctest::Approx(20.0 - 1.5 * std::log(10.0)));
    CHECK(bramson_m(0.5) == 1.0);
    CHECK(bramson_m_flagged(0.5));
    CHECK_FALSE(bramson_m_flagged(2.0));
    CHECK(bramson_frame_offset(3.0) == doctest::Approx(6.0 - 1.5 * std::log(4.0)));
    CHECK(discrete_front_speed(Frame::Lab, 0.01) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(discrete_front_speed(Frame::Bramson, 0.02) - 2.0 == doctest::Approx(-0.02 * 0.02 / 4.0).epsilon(0.05));
}

TEST_CASE("equilibria")
{
    const Trajectory z = solve_lab(InitialProfile::zero(), 1.0, 0.05, 5.0);
    for (double v : z.snapshots.back().values)
        REQUIRE(v == 0.0);

    GridProfile one;
    one.x0 = -60.0;
    one.h = 0.05;
    one.values.assign(2401, 1.0);
    LabOptions o;
    o.check_domain = false;
    const Trajectory tr = solve_lab_from(one, 5.0, o);
    const auto& g = tr.snapshots.back();
    for (std::size_t i = 0; g.x(i) < 20.0; ++i)
        REQUIRE(std::fabs(g.values[i] - 1.0) <= 1e-12);
}

TEST_CASE("spatially uniform data follows the logistic curve")
{
    const double eps = 0.01, T = 5.0;
    GridProfile u0;
    u0.x0 = -60.0;
    u0.h = 0.05;
    u0.values.assign(2401, eps);
    LabOptions o;
    o.check_domain = false;
    o.control.rtol = 1e-9;
    o.control.atol = 1e-12;
    const Trajectory tr = solve_lab_from(u0, T, o);
    const auto& g = tr.snapshots.back();
    const double exact = eps * std::exp(T) / (1.0 - eps + eps * std::exp(T));
    double err = 0.0;
    for (std::size_t i = 0; g.x(i) <= 30.0; ++i)
        err = std::max(err, std::fabs(g.values[i] - exact));
    CHECK(err <= 1e-6);
}

TEST_CASE("comparison principle on ordered data")
{
    LabOptions o;
    o.output_times = {1.0, 2.0, 5.0, 10.0};
    const auto a = solve_lab(InitialProfile::box(-1.0, 0.0), 0.3, 0.05, 10.0, o);
    const auto b = solve_lab(InitialProfile::box(-1.0, 0.0), 0.6, 0.05, 10.0, o);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k)
        for (std::size_t i = 0; i < a.snapshots[k].size(); ++i)
            REQUIRE(a.snapshots[k].values[i] <= b.snapshots[k].values[i] + 1e-12);
    CHECK(a.max_overshoot <= 1e-12);
}

TEST_CASE("Heaviside data spreads at speed 2")
{
    LabOptions o;
    o.output_times = {100.0};
    const auto tr = solve_lab(InitialProfile::step(), 1.0, 0.05, 100.0, o);
    const double X = front_position(tr.snapshots.back(), 0.5);
    CHECK(std::fabs(X / 100.0 - 2.0) <= 0.1);
    CHECK(std::fabs(X - bramson_m(100.0)) <= 3.0);
}

TEST_CASE("solve_lab preconditions")
{
    CHECK_THROWS_AS(solve_lab(InitialProfile::box(-1.0, 0.0), 0.0, 0.05, 1.0), UsageError);
    CHECK_THROWS_AS(solve_lab(InitialProfile::box(-1.0, 0.0), 1.0, 0.1, 1.0), UsageError);
    CHECK_THROWS_AS(solve_lab(InitialProfile::box(-1.0, 0.0, 2.0), 1.0, 0.05, 1.0), UsageError);
    LabOptions narrow;
    narrow.x_right = 5.0;
    CHECK_THROWS_AS(solve_lab(InitialProfile::box(-1.0, 0.0), 1.0, 0.05, 10.0, narrow), NumericError);
}

TEST_CASE("zframe basics")
{
    // only the boundary value e^{-A} feeds the zero profile, nothing grows from it
    const auto z = solve_zframe(5.0, InitialProfile::zero(), 0.05, 10.0);
    for (double v : z.snapshots.back().values)
        REQUIRE(std::fabs(v) <= 1e-9);

    // the sink only removes mass
    ZFrameOptions with, without;
    with.output_times = without.output_times = {1.0, 5.0, 20.0, 50.0};
    without.sink = false;
    const auto a = solve_zframe(5.0, InitialProfile::box(-1.0, 0.0), 0.05, 50.0, with);
    const auto b = solve_zframe(5.0, InitialProfile::box(-1.0, 0.0), 0.05, 50.0, without);
    for (std::size_t k = 1; k < a.snapshots.size(); ++k) {
        const double ma = std::accumulate(a.snapshots[k].values.begin(), a.snapshots[k].values.end(), 0.0);
        const double mb = std::accumulate(b.snapshots[k].values.begin(), b.snapshots[k].values.end(), 0.0);
        CHECK(ma <= mb);
    }
    for (const auto& s : a.snapshots)
        for (double v : s.values)
            REQUIRE(v >= 0.0);
}

TEST_CASE("zframe agrees with the lab frame")
{
    const double ell = 5.0, T = 20.0;
    const auto prof = InitialProfile::box(-1.0, 0.0);
    ZFrameOptions zo;
    zo.output_times = {T};
    zo.control.rtol = 1e-9;
    const double h = 0.02;
    const auto z = solve_zframe(ell, prof, h, T, zo);
    LabOptions lo;
    lo.output_times = {T};
    lo.control.rtol = 1e-9;
    lo.x_left = -60.0;
    const auto u = solve_lab(prof, std::exp(-ell), h, T, lo);
    const auto& us = u.snapshots.back();
    double diff = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double x = us.x(i);
        if (x - bramson_frame_offset(T) + ell > -zo.A + 1.0)
            diff = std::max(diff, std::fabs(lab_from_zframe(z.snapshots.back(), ell, x) - us.values[i]));
    }
    CHECK(diff <= 1e-4);
}

TEST_CASE("front position and the direct shift on a synthetic wave")
{
    const auto& w = wave();
    const double s0 = 0.73, h = 0.02;
    Trajectory tr;
    tr.frame = Frame::Lab;
    tr.h = h;
    for (double t = 20.0; t <= 600.0; t += 20.0) {
        GridProfile g;
        g.h = h;
        g.x0 = bramson_m(t) - 40.0;
        g.time = t;
        for (int i = 0; i <= 4000; ++i)
            g.values.push_back(w.eval_U(g.x(i) - bramson_m(t) + s0));
        tr.snapshots.push_back(g);
    }
    ShiftOptions so;
    so.discrete_speed = false;
    const ShiftEstimate s = extract_shift_direct(tr, w, so);
    CHECK(std::fabs(s.s_hat - s0) <= 2.0 * h);
    for (double off : s.offsets)
        CHECK(std::fabs(off - s0) <= 2.0 * h);

    GridProfile flat;
    flat.h = h;
    flat.values.assign(100, 0.2);
    CHECK_THROWS_AS(front_position(flat, 0.5), NumericError);
    GridProfile bumpy;
    bumpy.h = h;
    for (int i = 0; i < 100; ++i)
        bumpy.values.push_back(i < 50 ? (i % 2 ? 0.9 : 0.1) : 0.0);
    CHECK_THROWS_AS(front_position(bumpy, 0.5), NumericError);
}

TEST_CASE("direct shift: grid convergence, level independence, covariance")
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    const double T = 200.0;
    const double s1 = shift_of(bramson_run(box, 0.05, T));
    const Trajectory mid = bramson_run(box, 0.025, T);
    const double s2 = shift_of(mid);
    const double s3 = shift_of(bramson_run(box, 0.0125, T));
    const double order = std::log2(std::fabs(s1 - s2) / std::fabs(s2 - s3));
    CHECK(order >= 1.8);

    for (double level : {0.1, 0.3, 0.7, 0.9})
        CHECK(std::fabs(shift_of(mid, level) - s2) <= 2.0 * 0.025);

    // data moved right by n: the shift drops by n
    const double n = 2.0;
    CHECK(std::fabs(shift_of(bramson_run(box.shifted(n), 0.025, T)) - (s2 - n)) <= 2.0 * 0.025);
}

TEST_CASE("selfsimilar route preconditions")
{
    CHECK_THROWS_AS(x_eps_selfsimilar(1e-4, InitialProfile::zero()), NumericError);
    CHECK_THROWS_AS(x_eps_selfsimilar(0.6, InitialProfile::box(-1.0, 0.0)), UsageError);
    CHECK_THROWS_AS(x_eps_selfsimilar(0.1, InitialProfile::box(-1.0, 0.0)), UsageError);
    RInfinityEstimate r;
    r.ell = 10.0;
    r.value = -1.0;
    CHECK_THROWS_AS(shift_from_rinf(r), NumericError);
}

TEST_CASE("r_infinity at a small ell")
{
    const auto zero = r_infinity(5.0, InitialProfile::zero());
    CHECK(zero.value == 0.0);
    CHECK(zero.converged);

    const auto box = InitialProfile::box(-1.0, 0.0);
    const auto r = r_infinity(5.0, box);
    CHECK(r.converged);
    CHECK(r.T == doctest::Approx(2500.0));
    CHECK(r.value > 0.0);
    CHECK(std::fabs(r.closure()) <= 5e-3);
    // the decomposition's linear part starts at the quadrature value of Q_ell
    CHECK(r.q_grid0 == doctest::Approx(compute_Q_ell(5.0, box)).epsilon(1e-3));

    const RInfinityEstimate back = rinf_from_json(rinf_json(r));
    CHECK(back.value == r.value);
    CHECK(back.samples.size() == r.samples.size());
    CHECK(back.closure() == r.closure());

    const ShiftEstimate s = shift_from_rinf(r);
    CHECK(s.s_hat == doctest::Approx(5.0 - std::log(r.value)));
    CHECK(s.route == ShiftRoute::SelfSimilar);
}

TEST_CASE("Q_ell against its asymptotic form")
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    const double c = compute_cbar(box), c1 = compute_cbar1(box), g = compute_g_infinity().value;
    double prev = INFINITY;
    for (double ell : {10.0, 20.0, 40.0, 80.0}) {
        const double gap = std::fabs(compute_Q_ell(ell, box) - (c * ell + 3.0 * c * std::log(ell) + 1.5 * g * c + c1));
        CHECK(gap < prev);
        CHECK(gap * ell <= 5.0);
        prev = gap;
    }
}

TEST_CASE("linear Dirichlet diagnostics")
{
    const auto r = linear_dirichlet_diagnostics(0.02, 5.0);
    CHECK(r.steady_drift <= 1e-6);
    CHECK(r.moment_drift <= 1e-6);
    CHECK(r.lemma_ratio >= 3.0);
    CHECK(r.lemma_residual <= 0.02 * 0.02);
    CHECK_THROWS_AS(linear_dirichlet_diagnostics(0.07, 1.0, 12.0), UsageError);
    CHECK_THROWS_AS(linear_dirichlet_diagnostics(0.02, 1.0, 8.0), UsageError);
}

TEST_CASE("Gaussian factor probe")
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    const double c = compute_cbar(box);
    const double delta = 0.29;
    for (const auto& s : gaussian_factor_probe(20.0, InitialProfile::zero(), delta, {400.0}))
        CHECK(s.ratio == 0.0);
    const double r20 = gaussian_factor_probe(20.0, box, delta, {400.0})[0].ratio;
    const double r40 = gaussian_factor_probe(40.0, box, delta, {1600.0})[0].ratio;
    CHECK(std::fabs(r40 / 40.0 - c) < std::fabs(r20 / 20.0 - c));
    CHECK_THROWS_AS(gaussian_factor_probe(20.0, box, 0.3, {400.0}), UsageError);
}

// K fitted at ell = 20 does not bracket ell = 40 on desk-scale grids: the
// deviation from cbar ell grows faster than ell^{1-delta} there.
TEST_CASE("Gaussian factor bracket" * doctest::may_fail())
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    const double c = compute_cbar(box);
    const double delta = 0.29;
    const double r20 = gaussian_factor_probe(20.0, box, delta, {400.0})[0].ratio;
    const double r40 = gaussian_factor_probe(40.0, box, delta, {1600.0})[0].ratio;
    const double K = std::fabs(r20 - 20.0 * c) / std::pow(20.0, 1.0 - delta);
    CHECK(std::fabs(r40 - 40.0 * c) <= K * std::pow(40.0, 1.0 - delta));
}

TEST_CASE("least squares")
{
    std::vector<double> x, one, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(i * 0.3);
        one.push_back(1.0);
        y.push_back(1.5 - 0.25 * i * 0.3);
    }
    const LinearFit f = line_fit(x, y);
    CHECK(f.coef[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.coef[1] == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(f.rms <= 1e-12);
    const LinearFit g = least_squares({one, x}, y);
    CHECK(g.coef[1] == doctest::Approx(-0.25).epsilon(1e-12));
}
