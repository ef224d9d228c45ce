#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/constants.hpp"
#include "kppbbm/expansion.hpp"
#include "kppbbm/shift.hpp"

#include <cmath>

using namespace kppbbm;

// Long r_inf runs: ell up to 40 with T = 100 ell^2.

TEST_CASE("selfsimilar shift approaches the leading expansion")
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    ExpansionConstants c;
    c.cbar = compute_cbar(box);
    c.cbar1 = compute_cbar1(box);
    double prev = INFINITY;
    for (double ell : {10.0, 20.0, 40.0}) {
        const ShiftEstimate s = x_eps_selfsimilar(std::exp(-ell), box);
        CHECK(s.converged);
        const double gap = std::fabs(s.s_hat - eval_prop11(std::exp(-ell), c));
        MESSAGE("ell " << ell << " x_eps " << s.s_hat << " gap " << gap);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("selfsimilar shift under eps -> 2 eps")
{
    const auto box = InitialProfile::box(-1.0, 0.0);
    const double lam = 2.0;
    double prev = INFINITY;
    for (double ell : {10.0, 20.0}) {
        const double eps = std::exp(-ell);
        const double d = x_eps_selfsimilar(lam * eps, box).s_hat - x_eps_selfsimilar(eps, box).s_hat;
        const double gap = std::fabs(d - (-std::log(lam) + std::log(lam) / ell));
        MESSAGE("ell " << ell << " difference " << d << " gap " << gap);
        CHECK(gap < prev);
        prev = gap;
    }
}
