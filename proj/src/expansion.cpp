#include "kppbbm/expansion.hpp"

#include "kppbbm/errors.hpp"
#include "kppbbm/wave.hpp"

#include <cmath>

namespace kppbbm {

namespace {

void require_cbar(const ExpansionConstants& c)
{
    if (!(c.cbar > 0.0))
        throw NumericError("expansion: cbar must be positive");
}

double ell_of(double eps)
{
    if (!(eps > 0.0 && eps < std::exp(-2.0)))
        throw UsageError("expansion: eps must be in (0, e^-2)");
    return -std::log(eps);
}

} // namespace

double xlogx(double x)
{
    if (x < 0.0)
        throw UsageError("xlogx: negative argument");
    return x == 0.0 ? 0.0 : x * std::log(x);
}

double eval_prop11(double eps, const ExpansionConstants& c)
{
    require_cbar(c);
    const double L = ell_of(eps);
    return L - std::log(L) - std::log(c.cbar);
}

double eval_thm13(double eps, const ExpansionConstants& c)
{
    require_cbar(c);
    const double L = ell_of(eps);
    const double ll = std::log(L);
    return L - ll - std::log(c.cbar) - 2.0 * ll / L - (c.m1 - std::log(c.cbar) + c.cbar1 / c.cbar) / L;
}

double eval_prop33(double ell, const ExpansionConstants& c)
{
    require_cbar(c);
    if (!(ell >= 2.0))
        throw UsageError("eval_prop33: ell must be >= 2");
    return c.cbar * ell + 2.0 * c.cbar * std::log(ell) + c.m1 * c.cbar + c.cbar1 - xlogx(c.cbar);
}

ExpansionConstants shifted_constants(const ExpansionConstants& c, double L)
{
    ExpansionConstants s = c;
    const double eL = std::exp(L);
    s.cbar = eL * c.cbar;
    s.cbar1 = eL * c.cbar1 + L * eL * c.cbar;
    return s;
}

ExpansionConstants scaled_constants(const ExpansionConstants& c, double lambda)
{
    if (!(lambda > 0.0))
        throw UsageError("scaled_constants: lambda must be positive");
    ExpansionConstants s = c;
    s.cbar = lambda * c.cbar;
    s.cbar1 = lambda * c.cbar1;
    return s;
}

double laplace_wave_dual(double y, const WaveSolution& wave)
{
    if (!wave.normalized())
        throw UsageError("laplace_wave_dual: wave must be normalized");
    return 1.0 - wave.eval_U(y);
}

double laplace_extremal(const InitialProfile& psi, double shift_of_psi_hat, const WaveSolution& wave)
{
    if (!wave.normalized())
        throw UsageError("laplace_extremal: wave must be normalized");
    if (psi.is_zero())
        return 1.0;
    return 1.0 - wave.eval_U(shift_of_psi_hat);
}

double laplace_fluctuation_target(double lambda, double mu, double nu, double Z, double m1)
{
    if (!(lambda > 0.0))
        throw UsageError("laplace_fluctuation_target: lambda must be positive");
    if (!(mu > 0.0))
        throw NumericError("laplace_fluctuation_target: mu(phi0) must be positive");
    return std::exp(Z * mu * xlogx(lambda) + lambda * Z * mu * std::log(mu) - lambda * Z * (m1 * mu + nu));
}

double laplace_fluctuation_target(double lambda, const InitialProfile& phi0, double Z, const ExpansionConstants& c)
{
    return laplace_fluctuation_target(lambda, mu_of(phi0), nu_of(phi0), Z, c.m1);
}

double laplace_stable(double lambda, double t)
{
    if (!(lambda > 0.0) || !(t >= 0.0))
        throw UsageError("laplace_stable: need lambda > 0 and t >= 0");
    return std::exp(t * xlogx(lambda));
}

double e_n(double n)
{
    if (!(n > 1.0))
        throw UsageError("e_n: n must be > 1");
    return std::log1p(2.0 * std::log(n) / n);
}

} // namespace kppbbm
