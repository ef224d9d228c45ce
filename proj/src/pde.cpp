#include "kppbbm/pde.hpp"

#include "kppbbm/io.hpp"

#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kppbbm {

const char* frame_name(Frame f)
{
    switch (f) {
    case Frame::Lab: return "lab";
    case Frame::Bramson: return "bramson";
    case Frame::ZFrame: return "zframe";
    case Frame::SelfSimilar: return "selfsimilar";
    }
    return "?";
}

double GridProfile::interpolate(double xq) const
{
    if (values.empty() || xq < x0 || xq > x_end())
        return 0.0;
    const double s = (xq - x0) / h;
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= values.size() - 1)
        return values.back();
    const double f = s - i;
    return (1.0 - f) * values[i] + f * values[i + 1];
}

double bramson_m(double t)
{
    return t >= 1.0 ? 2.0 * t - 1.5 * std::log(t) : 2.0 * t;
}

bool bramson_m_flagged(double t)
{
    return t < 1.0;
}

double bramson_frame_offset(double t)
{
    return 2.0 * t - 1.5 * std::log1p(t);
}

double discrete_front_speed(Frame frame, double h)
{
    if (!(h > 0.0))
        throw UsageError("discrete_front_speed: h must be positive");
    const bool moving = frame == Frame::Bramson;
    if (!moving && frame != Frame::Lab)
        throw UsageError("discrete_front_speed: lab or bramson frame required");
    // growth rate of e^{-lambda x} per unit lambda, relative to the frame
    auto sigma = [&](double lam) {
        double g = 2.0 * (std::cosh(lam * h) - 1.0) / (h * h) + 1.0;
        if (moving)
            g -= 2.0 * std::sinh(lam * h) / h;
        return g / lam;
    };
    // golden section on a bracket around lambda = 1
    double a = 0.5, b = 1.5;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = sigma(c), fd = sigma(d);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = sigma(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = sigma(d);
        }
    }
    return sigma(0.5 * (a + b)) + (moving ? 2.0 : 0.0);
}

namespace {

// u_t = u_xx + c(t) u_x + u - u^2; node 0 Neumann (mirror ghost), node n-1 Dirichlet 0.
class KppSystem : public MolSystem {
public:
    KppSystem(std::size_t n, double h, bool moving) : n_(n), h_(h), moving_(moving) {}
    std::size_t size() const override { return n_; }
    int bandwidth() const override { return 1; }

    double speed(double t) const { return moving_ ? 2.0 - 1.5 / (t + 1.0) : 0.0; }

    void rhs(double t, const std::vector<double>& u, std::vector<double>& f) const override
    {
        f.resize(n_);
        const double d = 1.0 / (h_ * h_), c = speed(t) / (2.0 * h_);
        f[0] = 2.0 * d * (u[1] - u[0]) + u[0] - u[0] * u[0];
        for (std::size_t i = 1; i + 1 < n_; ++i)
            f[i] = d * (u[i + 1] - 2.0 * u[i] + u[i - 1]) + c * (u[i + 1] - u[i - 1]) + u[i] - u[i] * u[i];
        f[n_ - 1] = 0.0;
    }

    void jacobian(double t, const std::vector<double>& u, BandMatrix& J) const override
    {
        J.zero();
        const double d = 1.0 / (h_ * h_), c = speed(t) / (2.0 * h_);
        J(0, 0) = -2.0 * d + 1.0 - 2.0 * u[0];
        J(0, 1) = 2.0 * d;
        for (std::size_t i = 1; i + 1 < n_; ++i) {
            J(i, i - 1) = d - c;
            J(i, i) = -2.0 * d + 1.0 - 2.0 * u[i];
            J(i, i + 1) = d + c;
        }
    }

private:
    std::size_t n_;
    double h_;
    bool moving_;
};

// z_t = z_xx + a(t)(z - z_x) - s e^{-x} z^2 on nodes 0..n-2; node n-1 is the
// extrapolated value 2 z_{n-2} - z_{n-3} and is not an unknown.
class ZSystem : public MolSystem {
public:
    ZSystem(std::size_t n_nodes, double x0, double h, bool sink)
        : m_(n_nodes - 1), h_(h), s_(sink ? 1.0 : 0.0), em_(n_nodes)
    {
        for (std::size_t i = 0; i < n_nodes; ++i)
            em_[i] = std::exp(-(x0 + h * i));
    }
    std::size_t size() const override { return m_; }
    int bandwidth() const override { return 1; }

    void rhs(double t, const std::vector<double>& z, std::vector<double>& f) const override
    {
        f.resize(m_);
        const double a = 1.5 / (t + 1.0);
        const double d = 1.0 / (h_ * h_), c = a / (2.0 * h_);
        f[0] = 0.0;
        for (std::size_t i = 1; i + 1 < m_; ++i)
            f[i] = d * (z[i + 1] - 2.0 * z[i] + z[i - 1]) + a * z[i] - c * (z[i + 1] - z[i - 1]) -
                   s_ * em_[i] * z[i] * z[i];
        const std::size_t k = m_ - 1;
        f[k] = a * z[k] - (a / h_) * (z[k] - z[k - 1]) - s_ * em_[k] * z[k] * z[k];
    }

    void jacobian(double t, const std::vector<double>& z, BandMatrix& J) const override
    {
        J.zero();
        const double a = 1.5 / (t + 1.0);
        const double d = 1.0 / (h_ * h_), c = a / (2.0 * h_);
        for (std::size_t i = 1; i + 1 < m_; ++i) {
            J(i, i - 1) = d + c;
            J(i, i) = -2.0 * d + a - 2.0 * s_ * em_[i] * z[i];
            J(i, i + 1) = d - c;
        }
        const std::size_t k = m_ - 1;
        J(k, k - 1) = a / h_;
        J(k, k) = a - a / h_ - 2.0 * s_ * em_[k] * z[k];
    }

private:
    std::size_t m_;
    double h_, s_;
    std::vector<double> em_;
};

std::vector<double> merged_times(std::vector<double> times, double T)
{
    times.push_back(T);
    std::sort(times.begin(), times.end());
    std::vector<double> out;
    for (double t : times)
        if (t > 0.0 && t <= T && (out.empty() || t > out.back() + 1e-12))
            out.push_back(t);
    return out;
}

} // namespace

Trajectory solve_lab_from(GridProfile u0, double T, const LabOptions& opts)
{
    if (opts.frame != Frame::Lab && opts.frame != Frame::Bramson)
        throw UsageError("solve_lab: frame must be lab or bramson");
    if (!(T > 0.0))
        throw UsageError("solve_lab: T must be positive");
    if (u0.size() < 5)
        throw UsageError("solve_lab: grid too small");
    Trajectory tr;
    tr.frame = opts.frame;
    tr.h = u0.h;
    tr.meta = u0.meta;
    tr.control = opts.control;
    u0.frame = opts.frame;
    u0.time = 0.0;
    tr.snapshots.push_back(u0);

    KppSystem sys(u0.size(), u0.h, opts.frame == Frame::Bramson);
    TrBdf2 integ(sys, opts.control);
    std::vector<double> u = u0.values;
    u.back() = 0.0;
    double t = 0.0;
    auto check = [&](double tc, const std::vector<double>& v) {
        double hi = 0.0;
        for (double x : v)
            hi = std::max({hi, x - 1.0, -x});
        tr.max_overshoot = std::max(tr.max_overshoot, hi);
        if (hi > 1e-6 || !std::isfinite(hi)) {
            std::ostringstream os;
            os << "lab solver unstable at t = " << tc << ": values leave [0,1] by " << hi;
            throw NumericError(os.str());
        }
        if (opts.check_domain && v[v.size() - 2] > 1e-10) {
            std::ostringstream os;
            os << "domain too narrow: u = " << v[v.size() - 2] << " next to the right boundary at t = " << tc;
            throw NumericError(os.str());
        }
    };
    for (double tout : merged_times(opts.output_times, T)) {
        integ.advance(t, u, tout, check);
        GridProfile g = u0;
        g.values = u;
        g.time = t;
        tr.snapshots.push_back(std::move(g));
    }
    tr.stats = integ.stats();
    return tr;
}

Trajectory solve_lab(const InitialProfile& init, double eps, double h, double T, const LabOptions& opts)
{
    if (!(eps > 0.0 && eps <= 1.0))
        throw UsageError("solve_lab: eps must be in (0,1]");
    if (!(h > 0.0 && h <= 0.05))
        throw UsageError("solve_lab: need 0 < h <= 0.05");
    if (eps * init.sup_bound() > 1.0 + 1e-12)
        throw UsageError("solve_lab: eps * sup(phi) must be <= 1");
    double xr = opts.x_right;
    if (xr == 0.0) {
        const double front = opts.frame == Frame::Lab ? 2.0 * T : 0.0;
        xr = std::max(front, 0.0) + init.support_bound() + 6.0 * std::sqrt(T) + 30.0;
    }
    if (!(xr > opts.x_left))
        throw UsageError("solve_lab: empty domain");
    const std::size_t N = static_cast<std::size_t>(std::ceil((xr - opts.x_left) / h));
    GridProfile g;
    g.frame = opts.frame;
    g.x0 = opts.x_left;
    g.h = h;
    g.meta = eps;
    g.values.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i)
        g.values[i] = eps * init.cell_average(g.x(i), h);
    return solve_lab_from(std::move(g), T, opts);
}

Trajectory solve_zframe(double ell, const InitialProfile& profile, double h, double T,
                        const ZFrameOptions& opts)
{
    if (!(opts.A >= 20.0))
        throw UsageError("solve_zframe: need A >= 20");
    if (!(h > 0.0) || !(T > 0.0))
        throw UsageError("solve_zframe: need h > 0 and T > 0");
    double xr = opts.x_right;
    if (xr == 0.0)
        xr = ell + profile.support_bound() + 6.0 * std::sqrt(T);
    const std::size_t N = static_cast<std::size_t>(std::ceil((xr + opts.A) / h));
    if (N < 8)
        throw UsageError("solve_zframe: grid too small");
    const double x0 = -opts.A;

    Trajectory tr;
    tr.frame = Frame::ZFrame;
    tr.h = h;
    tr.meta = ell;
    tr.control = opts.control;

    GridProfile g;
    g.frame = Frame::ZFrame;
    g.x0 = x0;
    g.h = h;
    g.meta = ell;
    g.values.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        const double eta = g.x(i) - ell;
        const double phi = profile.cell_average(eta, h);
        g.values[i] = phi > 0.0 ? std::exp(eta) * phi : 0.0;
    }
    g.values[0] = std::exp(-opts.A);
    tr.snapshots.push_back(g);

    ZSystem sys(N + 1, x0, h, opts.sink);
    TrBdf2 integ(sys, opts.control);
    std::vector<double> z(g.values.begin(), g.values.end() - 1);
    std::vector<double> full(N + 1);
    auto expand = [&](const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), full.begin());
        full[N] = 2.0 * v[N - 1] - v[N - 2];
    };
    auto obs = [&](double tc, const std::vector<double>& v) {
        double lo = 0.0;
        for (double x : v)
            lo = std::min(lo, x);
        if (!std::isfinite(lo) || lo < -1e-8 * (1.0 + *std::max_element(v.begin(), v.end()))) {
            std::ostringstream os;
            os << "zframe solution went negative (" << lo << ") at t = " << tc;
            throw NumericError(os.str());
        }
        if (opts.observer) {
            expand(v);
            opts.observer(tc, full);
        }
    };
    if (opts.observer) {
        expand(z);
        opts.observer(0.0, full);
    }
    double t = 0.0;
    for (double tout : merged_times(opts.output_times, T)) {
        integ.advance(t, z, tout, obs);
        expand(z);
        GridProfile s = g;
        s.values = full;
        // roundoff undershoot only; obs() has rejected anything larger
        for (double& v : s.values)
            v = std::max(v, 0.0);
        s.time = t;
        tr.snapshots.push_back(std::move(s));
    }
    tr.stats = integ.stats();
    return tr;
}

double lab_from_zframe(const GridProfile& z, double ell, double x)
{
    const double y = x - bramson_frame_offset(z.time);
    return std::exp(-(y + ell)) * z.interpolate(y + ell);
}

void write_snapshot_csv(const GridProfile& g, const std::string& path)
{
    CsvTable t({"x", "value"});
    for (std::size_t i = 0; i < g.size(); ++i)
        t.row().cell(g.x(i)).cell(g.values[i]);
    atomic_write(path, t.str());
}

} // namespace kppbbm
