#include "kppbbm/wave.hpp"

#include "kppbbm/io.hpp"

#include "kppbbm/banded.hpp"
#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace kppbbm {

namespace {

const double kRootLeft = std::sqrt(2.0) - 1.0; // U = 1 - w, w ~ e^{r x}, r^2 + 2r - 1 = 0

// 15-point Gauss-Kronrod nodes/weights (Kronrod only) for smooth per-cell integrals.
constexpr double xk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                          0.207784955007898467600689403773245, 0.0};
constexpr double wk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                          0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

template <class F>
double gk15_fixed(F&& f, double a, double b)
{
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    double s = wk[7] * f(c);
    for (int j = 0; j < 7; ++j)
        s += wk[j] * (f(c - hl * xk[j]) + f(c + hl * xk[j]));
    return s * hl;
}

} // namespace

WaveSolution WaveSolution::from_samples(double x_min, double h, const std::vector<double>& U)
{
    if (U.size() < 8 || !(h > 0.0))
        throw UsageError("wave samples: need at least 8 points and h > 0");
    WaveSolution w;
    w.x_min_ = x_min;
    w.h_ = h;
    w.z_.resize(U.size());
    for (std::size_t i = 0; i < U.size(); ++i)
        w.z_[i] = std::exp(w.x(i)) * U[i];
    w.fit_tail();
    w.k0_ = w.A_ > 0.0 ? std::log(w.A_) + w.B_ / w.A_ : std::numeric_limits<double>::quiet_NaN();
    return w;
}

std::vector<double> WaveSolution::U_values() const
{
    std::vector<double> U(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i)
        U[i] = std::exp(-x(i)) * z_[i];
    return U;
}

void WaveSolution::fit_tail()
{
    const double hi = x_max() - 4.0, lo = x_max() - 12.0;
    if (lo < x_min_)
        throw UsageError("wave grid too short for the tail-fit window [x_max-12, x_max-4]");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        const double xi = x(i);
        if (xi < lo - 1e-9 || xi > hi + 1e-9)
            continue;
        sx += xi;
        sy += z_[i];
        sxx += xi * xi;
        sxy += xi * z_[i];
        ++n;
    }
    const double det = n * sxx - sx * sx;
    A_ = (n * sxy - sx * sy) / det;
    B_ = (sy - A_ * sx) / n;
    fit_residual_ = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        const double xi = x(i);
        if (xi < lo - 1e-9 || xi > hi + 1e-9)
            continue;
        fit_residual_ = std::max(fit_residual_, std::fabs(z_[i] / (A_ * xi + B_) - 1.0));
    }
}

double WaveSolution::raw_z(double xq) const
{
    const std::size_t n = z_.size();
    if (xq > x_max())
        return A_ * xq + B_;
    if (xq < x_min_) {
        const double w0 = 1.0 - z_[0] * std::exp(-x_min_);
        return std::exp(xq) * (1.0 - w0 * std::exp(kRootLeft * (xq - x_min_)));
    }
    double t = (xq - x_min_) / h_;
    std::size_t i = static_cast<std::size_t>(t);
    if (i >= n - 1)
        i = n - 2;
    // 4-point Lagrange on i-1..i+2, shifted at the ends
    std::size_t j0 = i == 0 ? 0 : i - 1;
    if (j0 + 3 >= n)
        j0 = n - 4;
    const double s = t - static_cast<double>(j0);
    const double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    const double l1 = s * (s - 2) * (s - 3) / 2.0;
    const double l2 = -s * (s - 1) * (s - 3) / 2.0;
    const double l3 = s * (s - 1) * (s - 2) / 6.0;
    return l0 * z_[j0] + l1 * z_[j0 + 1] + l2 * z_[j0 + 2] + l3 * z_[j0 + 3];
}

double WaveSolution::eval_z(double xq) const
{
    if (normalized_ && xq > x_max())
        return xq + k0_;
    return raw_z(xq);
}

double WaveSolution::eval_U(double xq) const
{
    if (xq < x_min_)
        return 1.0;
    if (normalized_ && xq > x_max())
        return (xq + k0_) * std::exp(-xq);
    return std::exp(-xq) * raw_z(xq);
}

double WaveSolution::eval_zbar0(double xq) const
{
    return std::exp(xq) * eval_U(xq);
}

double WaveSolution::level_point(double level) const
{
    if (!(level > 0.0 && level < 1.0))
        throw UsageError("wave level must be in (0,1)");
    const auto U = U_values();
    std::size_t i = 0;
    while (i + 1 < U.size() && U[i + 1] >= level)
        ++i;
    if (i + 1 >= U.size())
        throw NumericError("wave never crosses the requested level");
    double a = x(i), b = x(i + 1);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        (eval_U(m) >= level ? a : b) = m;
    }
    return 0.5 * (a + b);
}

namespace {

struct NewtonOutcome {
    int iterations = 0;
    double residual = 0.0;
};

// Discrete z'' = e^{-x} z^2 with the exponentially fitted second difference
// (z_{i+1} - 2 z_i + z_{i-1}) / (2 cosh h - 2), exact on both e^x and affine
// functions, so neither tail regime carries truncation error.
// Robin ghost on the left, Dirichlet z_N = x_max + kappa.
// Returns the residual relative to the stencil magnitude (roundoff floor ~1e-16
// at every node); uscale receives the max U-scale residual e^{-x_i}|R_i|.
double wave_residual(const std::vector<double>& z, double x0, double h, std::vector<double>& R,
                     double* uscale = nullptr)
{
    const std::size_t n = z.size() - 1; // unknowns 0..n-1, node n fixed
    R.resize(n);
    const double r = kRootLeft;
    const double c2 = 1.0 / (2.0 * std::cosh(h) - 2.0);
    const double g = 2.0 * std::sinh(h);
    double rel = 0.0, us = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x0 + h * i;
        const double zm = i == 0 ? z[1] - g * ((1.0 + r) * z[0] - r * std::exp(x0)) : z[i - 1];
        const double sink = std::exp(-xi) * z[i] * z[i];
        R[i] = (z[i + 1] - 2.0 * z[i] + zm) * c2 - sink;
        const double scale = (std::fabs(z[i + 1]) + 2.0 * std::fabs(z[i]) + std::fabs(zm)) * c2 + sink;
        rel = std::max(rel, std::fabs(R[i]) / scale);
        us = std::max(us, std::exp(-xi) * std::fabs(R[i]));
    }
    if (uscale)
        *uscale = us;
    return rel;
}

NewtonOutcome newton_wave(std::vector<double>& z, double x0, double h, double tol)
{
    const std::size_t n = z.size() - 1;
    const double r = kRootLeft;
    std::vector<double> R, Rt, a(n), b(n), c(n), d(n), zt;
    const double c2 = 1.0 / (2.0 * std::cosh(h) - 2.0);
    const double g = 2.0 * std::sinh(h);
    std::ostringstream trace;
    double res = wave_residual(z, x0, h, R);
    for (int it = 1; it <= 200; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = x0 + h * i;
            a[i] = c2;
            c[i] = c2;
            b[i] = -2.0 * c2 - 2.0 * std::exp(-xi) * z[i];
            d[i] = -R[i];
        }
        b[0] -= g * (1.0 + r) * c2;
        c[0] = 2.0 * c2;
        solve_tridiagonal(a, b, c, d);
        double lam = 1.0, rt = 0.0;
        for (;;) {
            zt = z;
            for (std::size_t i = 0; i < n; ++i)
                zt[i] += lam * d[i];
            rt = wave_residual(zt, x0, h, Rt);
            if (std::isfinite(rt) && (rt < (1.0 - 1e-4 * lam) * res || rt < 1e-14))
                break;
            lam *= 0.5;
            if (lam < 1e-6)
                break;
        }
        trace << "it " << it << " relative residual " << rt << " damping " << lam << "\n";
        double dmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            dmax = std::max(dmax, std::fabs(lam * d[i]) / (1.0 + std::fabs(z[i])));
        if (lam < 1e-6) {
            if (res < 1e-13)
                break; // already at the roundoff floor
            throw NumericError("wave Newton line search stalled\n" + trace.str());
        }
        z.swap(zt);
        R.swap(Rt);
        res = rt;
        if (!std::isfinite(res))
            throw NumericError("wave Newton iteration diverged\n" + trace.str());
        if (dmax < 1e-13) {
            double us = 0.0;
            wave_residual(z, x0, h, R, &us);
            if (us > tol)
                throw NumericError("wave residual " + std::to_string(us) + " above tol\n" + trace.str());
            return {it, us};
        }
    }
    double us = 0.0;
    wave_residual(z, x0, h, R, &us);
    if (us <= tol && res < 1e-13)
        return {200, us};
    throw NumericError("wave Newton iteration did not converge\n" + trace.str());
}

} // namespace

WaveSolution solve_wave(double x_min, double x_max, double h, double tol)
{
    if (!(x_min <= -30.0) || !(x_max >= 30.0))
        throw UsageError("solve_wave needs x_min <= -30 and x_max >= 30");
    if (!(h > 0.0 && h <= 0.02))
        throw UsageError("solve_wave needs 0 < h <= 0.02");
    if (!(tol > 0.0))
        throw UsageError("solve_wave needs tol > 0");
    const std::size_t N = static_cast<std::size_t>(std::llround((x_max - x_min) / h));
    const double hh = (x_max - x_min) / N;

    // softplus guess: e^x on the left, x on the right
    std::vector<double> z(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        const double xi = x_min + hh * i;
        z[i] = xi > 0 ? xi + std::log1p(std::exp(-xi)) : std::log1p(std::exp(xi));
    }

    WaveSolution w;
    w.x_min_ = x_min;
    w.h_ = hh;
    int iters = 0;
    double kappa = 0.0;
    double res = 0.0;
    // second pass re-solves with kappa = k0 estimate so the raw tail slope is ~1
    for (int pass = 0; pass < 2; ++pass) {
        z[N] = x_max + kappa;
        const NewtonOutcome o = newton_wave(z, x_min, hh, tol);
        iters += o.iterations;
        res = o.residual;
        w.z_ = z;
        w.fit_tail();
        kappa = std::log(w.A_) + w.B_ / w.A_;
    }
    w.residual_ = res;
    w.iterations_ = iters;
    w.k0_ = kappa;

    const auto U = w.U_values();
    for (std::size_t i = 0; i + 1 < U.size(); ++i) {
        if (!(U[i] > U[i + 1]))
            throw NumericError("wave is not strictly decreasing near x = " + std::to_string(w.x(i)) +
                               " (spurious branch)");
        if (i > 0 && !(U[i] > 0.0 && U[i] < 1.0))
            throw NumericError("wave leaves (0,1) at x = " + std::to_string(w.x(i)));
    }
    return w;
}

WaveSolution normalize_wave(const WaveSolution& raw)
{
    if (!(raw.A_ > 0.0))
        throw NumericError("normalize_wave: tail slope A <= 0 (fit window too narrow or wave unresolved)");
    const double s = std::log(raw.A_);
    WaveSolution w;
    w.x_min_ = raw.x_min_;
    w.h_ = raw.h_;
    w.z_.resize(raw.z_.size());
    const double es = std::exp(-s);
    for (std::size_t i = 0; i < w.z_.size(); ++i)
        w.z_[i] = es * raw.raw_z(w.x(i) + s);
    w.fit_tail();
    w.k0_ = s + raw.B_ / raw.A_;
    w.residual_ = raw.residual_;
    w.iterations_ = raw.iterations_;
    w.normalized_ = true;
    return w;
}

namespace {

// int_a^b f(x) e^{-x} z(x)^2 dx over the interpolant, cell by cell.
template <class F>
double integrate_interpolant(const WaveSolution& w, F&& f, double a, double b)
{
    if (!(b > a))
        return 0.0;
    const double h = w.h();
    auto g = [&](double x) {
        const double z = w.eval_z(x);
        return f(x) * std::exp(-x) * z * z;
    };
    const long i0 = static_cast<long>(std::floor((a - w.x_min()) / h));
    const long i1 = static_cast<long>(std::ceil((b - w.x_min()) / h));
    double s = 0.0;
    for (long i = i0; i < i1; ++i) {
        const double l = std::max(a, w.x_min() + h * i);
        const double r = std::min(b, w.x_min() + h * (i + 1));
        if (r > l)
            s += gk15_fixed(g, l, r);
    }
    return s;
}

// int_X^inf p(x) e^{-x} dx for a polynomial via e^{-X}(p + p' + p'' + ...)(X).
double right_tail_mass(double X, double k0)
{
    const double y = X + k0;
    return std::exp(-X) * (y * y + 2.0 * y + 2.0);
}

double right_tail_first(double X, double k0)
{
    const double p = X * (X + k0) * (X + k0);
    const double p1 = 3 * X * X + 4 * k0 * X + k0 * k0;
    const double p2 = 6 * X + 4 * k0;
    return std::exp(-X) * (p + p1 + p2 + 6.0);
}

} // namespace

WaveIdentityResiduals wave_identity_checks(const WaveSolution& w)
{
    if (!w.normalized())
        throw UsageError("wave_identity_checks needs a normalized wave");
    WaveIdentityResiduals r;
    const double a = w.x_min(), b = w.x_max(), k0 = w.k0();
    r.mass = integrate_interpolant(w, [](double) { return 1.0; }, a, b) + std::exp(a) +
             right_tail_mass(b, k0);
    r.first_moment = integrate_interpolant(w, [](double x) { return x; }, a, b) +
                     std::exp(a) * (a - 1.0) + right_tail_first(b, k0);
    r.residual_mass = std::fabs(r.mass - 1.0);
    r.residual_first_moment = std::fabs(r.first_moment + k0);
    return r;
}

double eval_G(const WaveSolution& w, double q)
{
    if (!w.normalized())
        throw UsageError("eval_G needs a normalized wave");
    const double a = -q, b = w.x_max(), k0 = w.k0();
    double s = 0.0;
    if (a < w.x_min()) {
        // left of the grid zbar0 = e^x: int (x+q) e^x
        s += std::exp(w.x_min()) * (w.x_min() + q - 1.0) - std::exp(a) * (a + q - 1.0);
        s += integrate_interpolant(w, [q](double x) { return x + q; }, w.x_min(), b);
    } else {
        s += integrate_interpolant(w, [q](double x) { return x + q; }, a, b);
    }
    if (a < b)
        s += right_tail_first(b, k0) + q * right_tail_mass(b, k0);
    else
        throw UsageError("eval_G: -q beyond the wave grid");
    return s;
}

double eval_G_split(const WaveSolution& w, double q)
{
    if (!w.normalized())
        throw UsageError("eval_G_split needs a normalized wave");
    const double a = -q;
    double s = 0.0;
    const double lo = w.x_min();
    if (a <= lo) {
        s = std::exp(a) * (a + q - 1.0);
    } else {
        s = std::exp(lo) * (lo + q - 1.0) + integrate_interpolant(w, [q](double x) { return x + q; }, lo, a);
    }
    return q - w.k0() - s;
}

void write_wave_csv(const WaveSolution& w, const std::string& path)
{
    CsvTable t({"x", "U"});
    const auto U = w.U_values();
    for (std::size_t i = 0; i < U.size(); ++i)
        t.row().cell(w.x(i)).cell(U[i]);
    atomic_write(path, t.str());
}

std::string wave_json(const WaveSolution& w)
{
    nlohmann::json j;
    j["k0"] = w.k0();
    j["tail_A"] = w.tail_A();
    j["tail_B"] = w.tail_B();
    j["tail_fit_residual"] = w.tail_fit_residual();
    j["residual_norm"] = w.ode_residual_norm();
    j["newton_iterations"] = w.newton_iterations();
    j["h"] = w.h();
    j["x_min"] = w.x_min();
    j["x_max"] = w.x_max();
    j["normalized"] = w.normalized();
    return j.dump(2);
}

} // namespace kppbbm
