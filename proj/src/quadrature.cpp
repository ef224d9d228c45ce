#include "kppbbm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace kppbbm {

namespace {

// Kronrod 15-point nodes (positive half) and weights; Gauss 7-point weights
// at the even-indexed Kronrod nodes.
constexpr double xgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr double wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const Integrand& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * wgk[7];
    double resg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * xgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        resk += wgk[j] * fsum;
        if (j % 2 == 1)
            resg += wg[j / 2] * fsum;
    }
    resk *= hl;
    resg *= hl;
    return {a, b, resk, std::fabs(resk - resg)};
}

} // namespace

QuadResult integrate_gk(const Integrand& f, double a, double b,
                        double abs_tol, double rel_tol, int max_intervals)
{
    QuadResult out;
    if (a == b)
        return out;
    std::priority_queue<Segment> heap;
    Segment s0 = gk15(f, a, b);
    heap.push(s0);
    double total = s0.value;
    double err = s0.error;
    int evals = 15;
    int intervals = 1;
    while (err > std::max(abs_tol, rel_tol * std::fabs(total))) {
        if (intervals >= max_intervals) {
            out.converged = false;
            break;
        }
        Segment worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        Segment l = gk15(f, worst.a, m);
        Segment r = gk15(f, m, worst.b);
        evals += 30;
        ++intervals;
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    // re-sum to shed the drift of incremental updates
    double v = 0.0, e = 0.0;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    out.value = v;
    out.error = e;
    out.evaluations = evals;
    return out;
}

QuadResult integrate_gk_upper(const Integrand& f, double a,
                              double abs_tol, double rel_tol, int max_intervals)
{
    auto g = [&](double s) {
        if (s <= 0.0)
            return 0.0;
        const double x = a + (1.0 - s) / s;
        return f(x) / (s * s);
    };
    return integrate_gk(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals);
}

QuadResult integrate_romberg(const Integrand& f, double a, double b,
                             double abs_tol, int max_levels)
{
    QuadResult out;
    std::vector<double> prev, cur;
    double h = b - a;
    double trap = 0.5 * h * (f(a) + f(b));
    int evals = 2;
    prev.push_back(trap);
    for (int k = 1; k <= max_levels; ++k) {
        const long n = 1L << (k - 1);
        double mid = 0.0;
        for (long i = 0; i < n; ++i)
            mid += f(a + (i + 0.5) * h);
        evals += static_cast<int>(n);
        h *= 0.5;
        trap = 0.5 * trap + h * mid;
        cur.assign(1, trap);
        double p4 = 1.0;
        for (int j = 1; j <= k; ++j) {
            p4 *= 4.0;
            cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (p4 - 1.0));
        }
        if (k >= 3) {
            const double e = std::fabs(cur[k] - prev[k - 1]);
            if (e <= abs_tol) {
                out.value = cur[k];
                out.error = e;
                out.evaluations = evals;
                return out;
            }
        }
        prev.swap(cur);
    }
    out.value = prev.back();
    out.error = std::fabs(prev.back() - prev[prev.size() - 2]);
    out.evaluations = evals;
    out.converged = false;
    return out;
}

double trapezoid(const std::vector<double>& y, double h)
{
    if (y.size() < 2)
        return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        s += y[i];
    return s * h;
}

} // namespace kppbbm
