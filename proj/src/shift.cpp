#include "kppbbm/shift.hpp"

#include "kppbbm/errors.hpp"
#include "kppbbm/fit.hpp"
#include "kppbbm/wave.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace kppbbm {

const char* route_name(ShiftRoute r)
{
    return r == ShiftRoute::Direct ? "direct" : "selfsimilar";
}

double front_position(const GridProfile& g, double level)
{
    if (!(level > 0.0 && level < 1.0))
        throw UsageError("front_position: level must be in (0,1)");
    const auto& v = g.values;
    const std::size_t n = v.size();
    // rightmost node at or above the level
    std::size_t i = n;
    for (std::size_t k = n; k-- > 0;)
        if (v[k] >= level) {
            i = k;
            break;
        }
    if (i == n || i + 1 >= n) {
        std::ostringstream os;
        os << "no " << level << "-crossing at t = " << g.time;
        throw NumericError(os.str());
    }
    const std::size_t lo = i >= 3 ? i - 3 : 0, hi = std::min(n - 1, i + 4);
    for (std::size_t k = lo; k < hi; ++k)
        if (v[k + 1] > v[k]) {
            std::ostringstream os;
            os << "profile not monotone near the crossing at t = " << g.time;
            throw NumericError(os.str());
        }
    const double f = (v[i] - level) / (v[i] - v[i + 1]);
    double X = g.x(i) + f * g.h;
    if (g.frame == Frame::Bramson)
        X += bramson_frame_offset(g.time);
    else if (g.frame != Frame::Lab)
        throw UsageError("front_position: lab or bramson frame required");
    return X;
}

ShiftEstimate extract_shift_direct(const Trajectory& tr, const WaveSolution& wave, const ShiftOptions& opts)
{
    if (tr.frame != Frame::Lab && tr.frame != Frame::Bramson)
        throw UsageError("extract_shift_direct: lab or bramson trajectory required");
    if (tr.snapshots.empty())
        throw UsageError("extract_shift_direct: empty trajectory");
    ShiftEstimate s;
    s.route = ShiftRoute::Direct;
    s.level_used = opts.level;
    const double xU = wave.level_point(opts.level);
    if (opts.discrete_speed)
        s.speed_correction = discrete_front_speed(tr.frame, tr.h) - 2.0;
    for (const auto& g : tr.snapshots) {
        if (g.time < std::max(1.0, opts.t_start))
            continue;
        const double X = front_position(g, opts.level) - s.speed_correction * g.time;
        s.t_sequence.push_back(g.time);
        s.offsets.push_back(xU - (X - bramson_m(g.time)));
    }
    fit_offsets(s, opts);
    return s;
}

void fit_offsets(ShiftEstimate& s, const ShiftOptions& opts)
{
    if (s.offsets.empty() || s.offsets.size() != s.t_sequence.size())
        throw NumericError("fit_offsets: no snapshot after t_start");
    s.fit_used = false;
    s.plateau = s.offsets.back();
    s.s_hat = s.plateau;

    const double T = s.t_sequence.back();
    s.fit_t_min = std::max(opts.fit_t_min, opts.fit_fraction * T);
    std::vector<double> one, c1, c2, c3, y;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
        const double t = s.t_sequence[k];
        if (t < s.fit_t_min)
            continue;
        one.push_back(1.0);
        c1.push_back(1.0 / std::sqrt(t));
        c2.push_back(std::log(t) / t);
        c3.push_back(1.0 / t);
        y.push_back(s.offsets[k]);
        lo = std::min(lo, s.offsets[k]);
        hi = std::max(hi, s.offsets[k]);
    }
    s.cauchy_spread = y.empty() ? 0.0 : hi - lo;
    // pure plateau is the fallback when the fit is ill-conditioned
    if (y.size() >= 8) {
        const LinearFit two = least_squares({one, c2, c3}, y);
        s.s_two_term = two.coef[0];
        LinearFit f = two;
        if (opts.sqrt_term && std::isfinite(opts.sqrt_coef)) {
            std::vector<double> yc(y);
            for (std::size_t k = 0; k < yc.size(); ++k)
                yc[k] -= opts.sqrt_coef * c1[k];
            f = least_squares({one, c2, c3}, yc);
            f.coef.insert(f.coef.begin() + 1, opts.sqrt_coef);
        } else if (opts.sqrt_term) {
            f = least_squares({one, c1, c2, c3}, y);
        }
        if (std::isfinite(f.coef[0]) && f.condition < 1e10) {
            s.fit_used = true;
            s.s_hat = f.coef[0];
            s.fit_rms = f.rms;
            s.fit_condition = f.condition;
            if (opts.sqrt_term) {
                s.fit_c = f.coef[1];
                s.fit_a = f.coef[2];
                s.fit_b = f.coef[3];
            } else {
                s.fit_a = f.coef[1];
                s.fit_b = f.coef[2];
            }
        }
    }
    if (!std::isfinite(s.s_hat))
        throw NumericError("fit_offsets: non-finite shift");
}

ShiftEstimate shift_from_rinf(const RInfinityEstimate& r)
{
    if (!(r.value > 0.0))
        throw NumericError("selfsimilar shift: r_inf must be positive (zero profile has no shift)");
    ShiftEstimate s;
    s.route = ShiftRoute::SelfSimilar;
    s.ell = r.ell;
    s.r_inf = r.value;
    s.converged = r.converged;
    s.s_hat = r.ell - std::log(r.value);
    s.plateau = r.ell - std::log(r.value_last);
    for (const auto& m : r.samples)
        if (m.moment > 0.0) {
            s.t_sequence.push_back(m.t);
            s.offsets.push_back(r.ell - std::log(m.moment));
        }
    return s;
}

ShiftEstimate x_eps_selfsimilar(double eps, const InitialProfile& profile, const RInfOptions& opts)
{
    if (!(eps > 0.0 && eps < 0.5))
        throw UsageError("x_eps_selfsimilar: eps must be in (0, 0.5)");
    if (profile.is_zero())
        throw NumericError("x_eps_selfsimilar: zero profile, shift undefined");
    const double ell = std::log(1.0 / eps);
    if (ell < 5.0 - 1e-12)
        throw UsageError("x_eps_selfsimilar: need log(1/eps) >= 5");
    return shift_from_rinf(r_infinity(ell, profile, opts));
}

std::string shift_json(const ShiftEstimate& s)
{
    nlohmann::json j;
    j["s_hat"] = s.s_hat;
    j["route"] = route_name(s.route);
    j["level_used"] = s.level_used;
    j["t_sequence"] = s.t_sequence;
    j["offsets"] = s.offsets;
    j["speed_correction"] = s.speed_correction;
    j["fit_used"] = s.fit_used;
    j["fit"] = {{"c_sqrt", s.fit_c}, {"a_logt", s.fit_a}, {"b_inv", s.fit_b}, {"rms", s.fit_rms},
                {"condition", s.fit_condition}, {"t_min", s.fit_t_min}, {"s_two_term", s.s_two_term}};
    j["plateau"] = s.plateau;
    j["cauchy_spread"] = s.cauchy_spread;
    if (s.route == ShiftRoute::SelfSimilar) {
        j["ell"] = s.ell;
        j["r_inf"] = s.r_inf;
        j["converged"] = s.converged;
    }
    return j.dump(2);
}

} // namespace kppbbm
