#include "kppbbm/special.hpp"

#include <cmath>

namespace kppbbm {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!, all terms positive.
double erf_series(double x)
{
    const double x2 = x * x;
    double term = x;
    double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if (term < 1e-17 * sum)
            break;
    }
    return 2.0 / kSqrtPi * std::exp(-x2) * sum;
}

} // namespace

double erfcx_cf_tail(double w)
{
    // Modified Lentz for K = a1/(w + a2/(w + ...)), a_j = j/2.
    const double tiny = 1e-300;
    double f = tiny;
    double C = f;
    double D = 0.0;
    for (int j = 1; j < 5000; ++j) {
        const double a = 0.5 * j;
        D = w + a * D;
        if (std::fabs(D) < tiny) D = tiny;
        C = w + a / C;
        if (std::fabs(C) < tiny) C = tiny;
        D = 1.0 / D;
        const double delta = C * D;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16)
            break;
    }
    return f;
}

double erfcx(double x)
{
    if (x < 0.0)
        return 2.0 * std::exp(x * x) - erfcx(-x);
    if (x < 2.0)
        return std::exp(x * x) * (1.0 - erf_series(x));
    return 1.0 / (kSqrtPi * (x + erfcx_cf_tail(x)));
}

double psibar_prime(double eta)
{
    return kSqrtPi * erfcx(0.5 * eta);
}

double psibar_log_defect(double z)
{
    if (z < 4.0)
        return 2.0 / z - psibar_prime(z);
    const double w = 0.5 * z;
    const double K = erfcx_cf_tail(w);
    // 2/z - 2/(z + 2K) = 4K / (z (z + 2K))
    return 4.0 * K / (z * (z + 2.0 * K));
}

} // namespace kppbbm
