#include "kppbbm/rinfinity.hpp"

#include "kppbbm/errors.hpp"
#include "kppbbm/fit.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/quadrature.hpp"
#include "kppbbm/special.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include <json.hpp>

namespace kppbbm {

namespace {

constexpr double kInvSqrt4Pi = 0.28209479177387814347;

const PsibarTable& psibar_table()
{
    static const PsibarTable table;
    return table;
}

} // namespace

RInfinityEstimate r_infinity(double ell, const InitialProfile& profile, const RInfOptions& opts)
{
    if (!(ell >= 0.0))
        throw UsageError("r_infinity: ell must be >= 0");
    if (!(opts.plateau_tol > 0.0))
        throw UsageError("r_infinity: plateau_tol must be positive");
    RInfinityEstimate r;
    r.ell = ell;
    r.h = opts.h;
    r.A = opts.A;
    r.plateau_tol = opts.plateau_tol;
    r.T = opts.T > 0.0 ? opts.T : std::max(100.0, opts.T_factor * ell * ell);
    if (profile.is_zero()) {
        r.converged = true;
        r.samples.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
        r.samples.push_back({r.T, std::log1p(r.T), 0.0, 0.0, 0.0});
        return r;
    }
    const auto t_start = std::chrono::steady_clock::now();
    const PsibarTable& psibar = psibar_table();

    // output times: log-spaced on [1, T]
    std::vector<double> times;
    const int nd = std::max(4, opts.samples_per_decade);
    const double decades = std::log10(r.T);
    const int nt = static_cast<int>(std::ceil(decades * nd));
    for (int k = 0; k <= nt; ++k)
        times.push_back(std::pow(10.0, decades * k / nt));

    ZFrameOptions zo;
    zo.A = opts.A;
    zo.control = opts.control;
    zo.output_times = times;
    zo.x_right = ell + std::max(0.0, profile.support_bound()) + opts.width * std::sqrt(r.T);
    const double h = opts.h;
    const double x0 = -opts.A;
    // first node with x >= 0 and its trapezoid weight
    const std::size_t i0 = static_cast<std::size_t>(std::ceil(-x0 / h - 1e-9));
    const bool node_at_zero = std::fabs(x0 + h * i0) < 1e-9 * h;

    double t_prev = 0.0, s_prev = 0.0;
    bool have_prev = false;
    std::size_t next_sample = 0;
    auto moments = [&](double t, const std::vector<double>& z, MomentSample& ms) {
        const double sq = std::sqrt(t + 1.0);
        double m = 0.0, mq = 0.0, s = 0.0;
        for (std::size_t i = i0; i < z.size(); ++i) {
            const double x = x0 + h * i;
            double w = h;
            if ((i == i0 && node_at_zero) || i + 1 == z.size())
                w *= 0.5;
            const double q = x + 1.5 * psibar(x / sq);
            m += w * x * z[i];
            mq += w * q * z[i];
            if (x < 80.0)
                s += w * std::exp(-x) * z[i] * z[i] * q;
        }
        const double f = std::pow(t + 1.0, -1.5);
        ms.t = t;
        ms.tau = std::log1p(t);
        ms.moment = kInvSqrt4Pi * f * m;
        ms.moment_q = kInvSqrt4Pi * f * mq;
        ms.sink = f * s;
    };
    // integrands in t of Y, E1 and E2 (without the (4pi)^{-1/2} factor)
    struct Rates {
        double s = 0.0, e1 = 0.0, e2 = 0.0;
    };
    auto rates = [&](double t, const std::vector<double>& z) {
        const double sq = std::sqrt(t + 1.0);
        Rates q;
        double e2 = 0.0;
        for (std::size_t i = i0; i < z.size(); ++i) {
            const double x = x0 + h * i;
            double w = h;
            if ((i == i0 && node_at_zero) || i + 1 == z.size())
                w *= 0.5;
            const double eta = x / sq;
            if (x < 80.0)
                q.s += w * std::exp(-x) * z[i] * z[i] * (x + 1.5 * psibar(eta));
            e2 += w * psibar_prime(eta) * z[i];
        }
        q.s *= std::pow(t + 1.0, -1.5);
        // z(t, 0) by linear interpolation
        const double xi = -x0 / h;
        const std::size_t j = static_cast<std::size_t>(xi);
        const double f = xi - j;
        const double z0 = (1.0 - f) * z[j] + f * z[j + 1];
        q.e1 = z0 * std::pow(t + 1.0, -1.5) * (1.0 + 1.5 * std::sqrt(M_PI) / sq);
        q.e2 = 2.25 * std::pow(t + 1.0, -3.0) * e2;
        return q;
    };
    double y_int = 0.0, e1_int = 0.0, e2_int = 0.0;
    Rates last_rates;
    zo.observer = [&](double t, const std::vector<double>& z) {
        const Rates q = rates(t, z);
        if (have_prev) {
            y_int += 0.5 * (q.s + s_prev) * (t - t_prev);
            e1_int += 0.5 * (q.e1 + last_rates.e1) * (t - t_prev);
            e2_int += 0.5 * (q.e2 + last_rates.e2) * (t - t_prev);
        }
        have_prev = true;
        t_prev = t;
        s_prev = q.s;
        last_rates = q;
        if (t == 0.0) {
            MomentSample ms;
            moments(t, z, ms);
            ms.z0 = q.e1 / (std::pow(t + 1.0, -1.5) * (1.0 + 1.5 * std::sqrt(M_PI)));
            r.q_grid0 = ms.moment_q;
            r.samples.push_back(ms);
        } else if (next_sample < times.size() && t >= times[next_sample] - 1e-12 * times[next_sample]) {
            MomentSample ms;
            moments(t, z, ms);
            ms.z0 = q.e1 / (std::pow(t + 1.0, -1.5) * (1.0 + 1.5 * std::sqrt(M_PI) / std::sqrt(t + 1.0)));
            r.samples.push_back(ms);
            while (next_sample < times.size() && times[next_sample] <= t * (1.0 + 1e-12))
                ++next_sample;
        }
    };

    const Trajectory tr = solve_zframe(ell, profile, h, r.T, zo);
    r.x_right = tr.snapshots.back().x_end();
    r.steps = tr.stats.accepted;
    r.rejected = tr.stats.rejected;

    const MomentSample& last = r.samples.back();
    r.value_last = last.moment;
    r.y_integral = -kInvSqrt4Pi * y_int;
    // late-time decay: S, E1 ~ (t+1)^{-3/2}, E2 ~ (t+1)^{-2}
    r.y_tail = -kInvSqrt4Pi * 2.0 * (r.T + 1.0) * last.sink;
    r.e1_integral = kInvSqrt4Pi * e1_int;
    r.e1_tail = kInvSqrt4Pi * 2.0 * (r.T + 1.0) * last_rates.e1;
    r.e2_integral = kInvSqrt4Pi * e2_int;
    r.e2_tail = kInvSqrt4Pi * (r.T + 1.0) * last_rates.e2;
    r.value_q_tail = last.moment_q + r.y_tail;

    // plateau drift over the last decade
    double m_decade = r.samples.front().moment;
    for (const auto& s : r.samples)
        if (s.t <= r.T / 10.0 * (1.0 + 1e-9))
            m_decade = s.moment;
    r.plateau_drift = std::fabs(last.moment - m_decade) / std::max(std::fabs(last.moment), 1e-300);
    r.converged = r.plateau_drift < opts.plateau_tol;

    // extrapolation over the last decade
    std::vector<double> f0, f1, f2, y;
    for (const auto& s : r.samples)
        if (s.t >= r.T / 10.0 * (1.0 - 1e-9)) {
            f0.push_back(1.0);
            f1.push_back(1.0 / std::sqrt(s.t + 1.0));
            f2.push_back(1.0 / (s.t + 1.0));
            y.push_back(s.moment);
        }
    if (y.size() >= 6) {
        const LinearFit f = least_squares({f0, f1, f2}, y);
        r.value = f.coef[0];
        r.fit_a = f.coef[1];
        r.fit_b = f.coef[2];
    } else {
        r.value = last.moment;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return r;
}

double compute_Q_ell(double ell, const InitialProfile& profile, double tol)
{
    const PsibarTable& psibar = psibar_table();
    double s = 0.0;
    for (const auto& pc : profile.pieces()) {
        if (pc.c0 == 0.0 && pc.c1 == 0.0)
            continue;
        // eta = x + ell over the piece, restricted to eta >= 0
        const double lo = std::max(0.0, pc.left + ell);
        const double hi = pc.right + ell;
        if (!(hi > lo))
            continue;
        auto f = [&](double eta) {
            const double x = eta - ell;
            return (eta + 1.5 * psibar(eta)) * std::exp(x) * std::max(0.0, pc.c0 + pc.c1 * x);
        };
        // split at eta = 1 where psibar changes character
        double v = 0.0;
        if (lo < 1.0 && hi > 1.0) {
            v += integrate_gk(f, lo, 1.0, tol, 1e-14).value;
            v += integrate_gk(f, 1.0, hi, tol, 1e-14).value;
        } else {
            v += integrate_gk(f, lo, hi, tol, 1e-14).value;
        }
        s += v;
    }
    return kInvSqrt4Pi * s;
}

Decomposition decompose_r_infinity(const RInfinityEstimate& rinf, const InitialProfile& profile,
                                   const ExpansionConstants& c)
{
    Decomposition d;
    d.ell = rinf.ell;
    d.r_inf = rinf.value;
    d.Q_ell = compute_Q_ell(rinf.ell, profile);
    d.Y_ell = rinf.y_integral + rinf.y_tail;
    d.E_ell = d.r_inf - d.Q_ell - d.Y_ell;
    d.E_direct = rinf.e1_integral + rinf.e1_tail + rinf.e2_integral + rinf.e2_tail;
    d.closure = rinf.closure();
    const double L = rinf.ell;
    if (L > 0.0 && c.cbar > 0.0) {
        d.Q_asymptotic = c.cbar * L + 3.0 * c.cbar * std::log(L) + 1.5 * c.g_inf * c.cbar + c.cbar1;
        d.Y_asymptotic = -c.cbar * std::log(L) - c.cbar * std::log(c.cbar) + c.k0 * c.cbar + 0.5 * c.cbar;
    }
    return d;
}

std::vector<GaussianProbeSample> gaussian_factor_probe(double ell, const InitialProfile& profile,
                                                       double delta, const std::vector<double>& t_samples,
                                                       double h)
{
    if (!(delta > 0.0 && delta < 0.3))
        throw UsageError("gaussian_factor_probe: delta must be in (0, 0.3)");
    if (t_samples.empty())
        throw UsageError("gaussian_factor_probe: no sample times");
    std::vector<GaussianProbeSample> out;
    if (profile.is_zero()) {
        for (double t : t_samples)
            out.push_back({t, std::pow(t + 1.0, delta), 0.0, 0.0});
        return out;
    }
    const double T = *std::max_element(t_samples.begin(), t_samples.end());
    ZFrameOptions zo;
    zo.output_times = t_samples;
    const Trajectory tr = solve_zframe(ell, profile, h, T, zo);
    for (double t : t_samples) {
        const GridProfile* snap = nullptr;
        for (const auto& s : tr.snapshots)
            if (std::fabs(s.time - t) <= 1e-9 * (1.0 + t))
                snap = &s;
        if (!snap)
            throw NumericError("gaussian_factor_probe: missing snapshot");
        GaussianProbeSample g;
        g.t = t;
        g.x = std::pow(t + 1.0, delta);
        g.z = snap->interpolate(g.x);
        g.ratio = g.z / (g.x * std::exp(-ell * ell / (4.0 * (t + 1.0))));
        out.push_back(g);
    }
    return out;
}

std::string rinf_json(const RInfinityEstimate& r)
{
    nlohmann::json j;
    j["ell"] = r.ell;
    j["value"] = r.value;
    j["converged"] = r.converged;
    j["plateau_drift"] = r.plateau_drift;
    j["plateau_tol"] = r.plateau_tol;
    j["value_last"] = r.value_last;
    j["fit_a"] = r.fit_a;
    j["fit_b"] = r.fit_b;
    j["value_q_tail"] = r.value_q_tail;
    j["y_integral"] = r.y_integral;
    j["y_tail"] = r.y_tail;
    j["q_grid0"] = r.q_grid0;
    j["e1_integral"] = r.e1_integral;
    j["e1_tail"] = r.e1_tail;
    j["e2_integral"] = r.e2_integral;
    j["e2_tail"] = r.e2_tail;
    j["closure"] = r.closure();
    j["h"] = r.h;
    j["A"] = r.A;
    j["T"] = r.T;
    j["x_right"] = r.x_right;
    j["steps"] = r.steps;
    j["rejected"] = r.rejected;
    nlohmann::json s = nlohmann::json::array();
    for (const auto& m : r.samples)
        s.push_back({{"t", m.t}, {"tau", m.tau}, {"moment", m.moment}, {"moment_q", m.moment_q}, {"sink", m.sink}, {"z0", m.z0}});
    j["samples"] = s;
    return j.dump(2);
}

RInfinityEstimate rinf_from_json(const std::string& text)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    RInfinityEstimate r;
    r.ell = j.at("ell");
    r.value = j.at("value");
    r.converged = j.at("converged");
    r.plateau_drift = j.at("plateau_drift");
    r.plateau_tol = j.at("plateau_tol");
    r.value_last = j.at("value_last");
    r.fit_a = j.at("fit_a");
    r.fit_b = j.at("fit_b");
    r.value_q_tail = j.at("value_q_tail");
    r.y_integral = j.at("y_integral");
    r.y_tail = j.at("y_tail");
    r.q_grid0 = j.at("q_grid0");
    r.e1_integral = j.at("e1_integral");
    r.e1_tail = j.at("e1_tail");
    r.e2_integral = j.at("e2_integral");
    r.e2_tail = j.at("e2_tail");
    r.h = j.at("h");
    r.A = j.at("A");
    r.T = j.at("T");
    r.x_right = j.at("x_right");
    r.steps = j.at("steps");
    r.rejected = j.at("rejected");
    for (const auto& m : j.at("samples"))
        r.samples.push_back({m.at("t"), m.at("tau"), m.at("moment"), m.at("moment_q"), m.at("sink"), m.at("z0")});
    return r;
}

} // namespace kppbbm
