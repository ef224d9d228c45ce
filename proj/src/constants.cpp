#include "kppbbm/constants.hpp"

#include "kppbbm/errors.hpp"
#include "kppbbm/quadrature.hpp"
#include "kppbbm/special.hpp"
#include "kppbbm/wave.hpp"

#include <cmath>
#include <sstream>

namespace kppbbm {

namespace {

constexpr double kInvSqrt4Pi = 0.28209479177387814347;

// int_l^r x^k (c0 + c1 x) e^x dx in closed form, with l possibly -inf.
// Antiderivatives: x^n e^x -> e^x P_n(x), P0 = 1, P1 = x-1, P2 = x^2-2x+2.
double linear_exp_moment(double l, double r, double c0, double c1, int k)
{
    auto F = [&](double x) {
        if (!std::isfinite(x))
            return 0.0;
        const double e = std::exp(x);
        const double P0 = 1.0, P1 = x - 1.0, P2 = x * x - 2.0 * x + 2.0;
        return k == 0 ? e * (c0 * P0 + c1 * P1) : e * (c0 * P1 + c1 * P2);
    };
    return F(r) - F(l);
}

} // namespace

MomentResult profile_moment(const InitialProfile& phi, int k, double tol)
{
    if (k != 0 && k != 1)
        throw UsageError("profile_moment: k must be 0 or 1");
    if (!(tol > 0.0))
        throw UsageError("tolerance must be positive");
    MomentResult out;
    const auto& pcs = phi.pieces();
    if (pcs.empty())
        return out;
    out.lower = pcs.front().left;
    out.upper = phi.support_bound();
    double sum = 0.0, err = 0.0;
    for (const auto& pc : pcs) {
        if (pc.c0 == 0.0 && pc.c1 == 0.0)
            continue;
        if (phi.kind() == InitialProfile::Kind::Table && std::isfinite(pc.left)) {
            // table segments by adaptive quadrature
            auto f = [&](double x) { return std::pow(x, k) * std::exp(x) * (pc.c0 + pc.c1 * x); };
            const QuadResult q = integrate_gk(f, pc.left, pc.right, 0.01 * tol / kInvSqrt4Pi, 1e-15);
            if (!q.converged) {
                std::ostringstream os;
                os << "profile moment quadrature did not converge on [" << pc.left << ", "
                   << pc.right << "], achieved error " << q.error;
                throw NumericError(os.str());
            }
            sum += q.value;
            err += q.error;
        } else {
            const double v = linear_exp_moment(pc.left, pc.right, pc.c0, pc.c1, k);
            sum += v;
            err += 4e-16 * (std::fabs(v) + 1.0);
        }
    }
    out.value = kInvSqrt4Pi * sum;
    out.error = kInvSqrt4Pi * err;
    return out;
}

double compute_cbar(const InitialProfile& phi, double tol)
{
    return profile_moment(phi, 0, tol).value;
}

double compute_cbar1(const InitialProfile& phi, double tol)
{
    return profile_moment(phi, 1, tol).value;
}

double compute_psibar(double eta, double tol)
{
    if (!(eta >= 0.0))
        throw UsageError("psibar needs eta >= 0");
    if (eta == 0.0)
        return 0.0;
    const QuadResult q = integrate_gk(psibar_prime, 0.0, eta, tol, 1e-15);
    if (!q.converged)
        throw NumericError("psibar quadrature did not converge");
    return q.value;
}

double psibar_tail_series(double eta)
{
    const double u = 1.0 / (eta * eta);
    return u * (2.0 + u * (-6.0 + u * (40.0 + u * (-420.0 + u * 6048.0))));
}

GInfinityResult compute_g_infinity(double tol)
{
    if (!(tol > 0.0))
        throw UsageError("tolerance must be positive");
    GInfinityResult r;

    // scheme A: adaptive Gauss-Kronrod
    const QuadResult a1 = integrate_gk(psibar_prime, 0.0, 1.0, 1e-3 * tol, 1e-15);
    const QuadResult a2 = integrate_gk_upper(psibar_log_defect, 1.0, 1e-3 * tol, 1e-15);
    r.scheme_a = a1.value - a2.value;
    r.error_a = a1.error + a2.error;

    // scheme B: Romberg on dyadic panels of [1, Z], series tail beyond Z
    const double Z = 100.0;
    const QuadResult b1 = integrate_romberg(psibar_prime, 0.0, 1.0, 1e-3 * tol);
    double defect = 0.0, derr = 0.0;
    for (double lo = 1.0; lo < Z;) {
        const double hi = std::min(2.0 * lo, Z);
        const QuadResult q = integrate_romberg(psibar_log_defect, lo, hi, 1e-4 * tol);
        defect += q.value;
        derr += q.error;
        lo = hi;
    }
    r.truncation_b = Z;
    r.tail_b = psibar_tail_series(Z);
    r.scheme_b = b1.value - (defect + r.tail_b);
    r.error_b = b1.error + derr;

    if (!a1.converged || !a2.converged)
        throw NumericError("g_inf scheme A did not converge");
    if (std::fabs(r.scheme_a - r.scheme_b) > tol) {
        std::ostringstream os;
        os.precision(16);
        os << "g_inf schemes disagree: A = " << r.scheme_a << ", B = " << r.scheme_b;
        throw NumericError(os.str());
    }
    r.value = r.scheme_a;
    return r;
}

PsibarTable::PsibarTable(double eta_max, double step)
    : step_(step), eta_max_(eta_max), g_inf_(compute_g_infinity(1e-11).value)
{
    const std::size_t n = static_cast<std::size_t>(std::ceil(eta_max / step)) + 1;
    eta_max_ = (n - 1) * step;
    val_.resize(n);
    der_.resize(n);
    val_[0] = 0.0;
    der_[0] = psibar_prime(0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const QuadResult q = integrate_gk(psibar_prime, (i - 1) * step, i * step, 1e-16, 1e-16, 8);
        val_[i] = val_[i - 1] + q.value;
        der_[i] = psibar_prime(i * step);
    }
}

double PsibarTable::operator()(double eta) const
{
    if (eta <= 0.0)
        return 0.0;
    if (eta >= eta_max_)
        return 2.0 * std::log(eta) + g_inf_ + psibar_tail_series(eta);
    const std::size_t i = static_cast<std::size_t>(eta / step_);
    const double t = (eta - i * step_) / step_;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * val_[i] + h10 * step_ * der_[i] + h01 * val_[i + 1] + h11 * step_ * der_[i + 1];
}

ExpansionConstants assemble_constants(double cbar, double cbar1, double g_inf, double k0)
{
    ExpansionConstants c;
    c.cbar = cbar;
    c.cbar1 = cbar1;
    c.g_inf = g_inf;
    c.k0 = k0;
    c.m1 = 1.5 * g_inf + k0 + 0.5;
    return c;
}

ExpansionConstants assemble_constants(const InitialProfile& phi, const WaveSolution& wave, double tol)
{
    if (!wave.normalized() || !std::isfinite(wave.k0()))
        throw UsageError("assemble_constants needs a normalized wave with a valid k0");
    const MomentResult m0 = profile_moment(phi, 0, tol);
    const MomentResult m1 = profile_moment(phi, 1, tol);
    const GInfinityResult g = compute_g_infinity(tol);
    ExpansionConstants c = assemble_constants(m0.value, m1.value, g.value, wave.k0());
    c.tol = tol;
    c.lower = m0.lower;
    c.upper = m0.upper;
    c.g_truncation = g.truncation_b;
    return c;
}

} // namespace kppbbm
