#include "kppbbm/integrator.hpp"

#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kppbbm {

namespace {
const double kGamma = 2.0 - std::sqrt(2.0);
}

TrBdf2::TrBdf2(const MolSystem& sys, StepControl ctrl)
    : sys_(sys), ctrl_(ctrl), dt_(ctrl.dt_init)
{
    const std::size_t n = sys.size();
    J_.resize(n, sys.bandwidth());
    M_.resize(n, sys.bandwidth());
}

// Solve Y - cdt F(t, Y) = rhs by Newton with one Jacobian per stage.
bool TrBdf2::stage(double t, double cdt, const std::vector<double>& rhs, std::vector<double>& y)
{
    const std::size_t n = sys_.size();
    const int w = sys_.bandwidth();
    sys_.jacobian(t, y, J_);
    M_.resize(n, w);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = i >= static_cast<std::size_t>(w) ? i - w : 0;
        const std::size_t j1 = std::min(n - 1, i + w);
        for (std::size_t j = j0; j <= j1; ++j)
            M_(i, j) = (i == j ? 1.0 : 0.0) - cdt * J_(i, j);
    }
    M_.factorize();
    double ymax = 0.0;
    for (double v : y)
        ymax = std::max(ymax, std::fabs(v));
    const double scale = ctrl_.atol + ctrl_.rtol * ymax;
    double prev = 1e300;
    for (int it = 0; it < 12; ++it) {
        sys_.rhs(t, y, f_);
        g_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            g_[i] = -(y[i] - cdt * f_[i] - rhs[i]);
        M_.solve(g_);
        double dn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += g_[i];
            dn = std::max(dn, std::fabs(g_[i]));
        }
        sys_.enforce(y);
        ++stats_.newton_iterations;
        if (!std::isfinite(dn))
            return false;
        if (dn <= 1e-3 * scale || dn <= 1e-14 * ymax)
            return true;
        if (it > 2 && dn > 0.9 * prev)
            return false;
        prev = dn;
    }
    return false;
}

bool TrBdf2::step(double t, const std::vector<double>& y, double dt, std::vector<double>& out)
{
    const std::size_t n = sys_.size();
    // trapezoid stage to t + gamma dt
    sys_.rhs(t, y, f0_);
    rhs_.resize(n);
    const double c1 = 0.5 * kGamma * dt;
    for (std::size_t i = 0; i < n; ++i)
        rhs_[i] = y[i] + c1 * f0_[i];
    yg_ = y;
    for (std::size_t i = 0; i < n; ++i)
        yg_[i] += kGamma * dt * f0_[i];
    sys_.enforce(yg_);
    if (!stage(t + kGamma * dt, c1, rhs_, yg_))
        return false;
    // BDF2 stage to t + dt
    const double a = 1.0 / (kGamma * (2.0 - kGamma));
    const double b = (1.0 - kGamma) * (1.0 - kGamma) / (kGamma * (2.0 - kGamma));
    const double c2 = (1.0 - kGamma) / (2.0 - kGamma) * dt;
    for (std::size_t i = 0; i < n; ++i)
        rhs_[i] = a * yg_[i] - b * y[i];
    out = yg_;
    // linear extrapolation from (t, y), (t + gamma dt, yg) as the initial guess
    const double e = 1.0 / kGamma;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i] + e * (yg_[i] - y[i]);
    sys_.enforce(out);
    return stage(t + dt, c2, rhs_, out);
}

void TrBdf2::advance(double& t, std::vector<double>& y, double t_end, const Observer& obs)
{
    std::vector<double> big, half, two;
    while (t < t_end) {
        double dt = std::min({dt_, ctrl_.dt_max, t_end - t});
        bool last = (t + dt >= t_end);
        if (!last && t + 1.5 * dt > t_end) {
            // avoid a sliver step at the end
            dt = 0.5 * (t_end - t);
        }
        if (dt < ctrl_.dt_min) {
            std::ostringstream os;
            os << "time step underflow at t = " << t << " (dt = " << dt << ")";
            throw NumericError(os.str());
        }
        bool ok = step(t, y, dt, big) && step(t, y, 0.5 * dt, half) &&
                  step(t + 0.5 * dt, half, 0.5 * dt, two);
        double err = 1e300;
        if (ok) {
            double ymax = 0.0, dmax = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                ymax = std::max(ymax, std::fabs(two[i]));
                dmax = std::max(dmax, std::fabs(two[i] - big[i]));
            }
            err = dmax / 3.0 / (ctrl_.atol + ctrl_.rtol * ymax);
            if (!std::isfinite(err))
                err = 1e300;
        }
        if (err <= 1.0) {
            t = last ? t_end : t + dt;
            y.swap(two);
            ++stats_.accepted;
            stats_.last_dt = dt;
            const double fac = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : ctrl_.max_growth;
            // keep the proposal from the full controller, not the truncated end step
            if (!last)
                dt_ = dt * std::clamp(fac, 0.2, ctrl_.max_growth);
            else
                dt_ = std::max(dt_, dt * std::clamp(fac, 0.2, ctrl_.max_growth));
            if (obs)
                obs(t, y);
        } else {
            ++stats_.rejected;
            const double fac = ok ? 0.9 * std::pow(err, -1.0 / 3.0) : 0.25;
            dt_ = dt * std::clamp(fac, 0.1, 0.5);
        }
    }
}

} // namespace kppbbm
