#include "kppbbm/linear_dirichlet.hpp"

#include "kppbbm/banded.hpp"
#include "kppbbm/constants.hpp"
#include "kppbbm/errors.hpp"
#include "kppbbm/integrator.hpp"
#include "kppbbm/special.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace kppbbm {

namespace {

// Unknowns are nodes 1..N-1; ghost values come from odd reflection at 0 and
// zero beyond B.
class DirichletSystem : public MolSystem {
public:
    DirichletSystem(std::size_t N, double h, double k) : n_(N - 1), h_(h), k_(k) {}
    std::size_t size() const override { return n_; }
    int bandwidth() const override { return 2; }

    // value at node j (may be a ghost)
    double at(const std::vector<double>& z, long j) const
    {
        if (j == 0 || j >= static_cast<long>(n_) + 1)
            return 0.0;
        if (j < 0)
            return -z[static_cast<std::size_t>(-j - 1)];
        return z[static_cast<std::size_t>(j - 1)];
    }

    void rhs(double t, const std::vector<double>& z, std::vector<double>& f) const override
    {
        f.resize(n_);
        const double c2 = 1.0 / (12.0 * h_ * h_), c1 = 1.0 / (12.0 * h_);
        const double drift = k_ * std::exp(-0.5 * t);
        for (std::size_t m = 0; m < n_; ++m) {
            const long i = static_cast<long>(m) + 1;
            const double fm2 = at(z, i - 2), fm1 = at(z, i - 1), f0 = z[m], fp1 = at(z, i + 1), fp2 = at(z, i + 2);
            const double d2 = c2 * (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2);
            const double d1 = c1 * (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2);
            const double g1 = c1 * (eta(i - 2) * fm2 - 8.0 * eta(i - 1) * fm1 + 8.0 * eta(i + 1) * fp1 -
                                    eta(i + 2) * fp2);
            f[m] = d2 + 0.5 * g1 + 0.5 * f0 - drift * d1;
        }
    }

    void jacobian(double t, const std::vector<double>&, BandMatrix& J) const override
    {
        J.zero();
        const double c2 = 1.0 / (12.0 * h_ * h_), c1 = 1.0 / (12.0 * h_);
        const double drift = k_ * std::exp(-0.5 * t);
        const double w2[5] = {-c2, 16.0 * c2, -30.0 * c2, 16.0 * c2, -c2};
        const double w1[5] = {c1, -8.0 * c1, 0.0, 8.0 * c1, -c1};
        for (std::size_t m = 0; m < n_; ++m) {
            const long i = static_cast<long>(m) + 1;
            for (int o = -2; o <= 2; ++o) {
                const long j = i + o;
                double c = w2[o + 2] + 0.5 * w1[o + 2] * eta(j) - drift * w1[o + 2];
                if (o == 0)
                    c += 0.5;
                // map node j to an unknown
                double sign = 1.0;
                long u = j;
                if (j < 0) {
                    u = -j;
                    sign = -1.0;
                }
                if (u == 0 || u >= static_cast<long>(n_) + 1)
                    continue;
                J(m, static_cast<std::size_t>(u - 1)) += sign * c;
            }
        }
    }

    double eta(long j) const { return h_ * j; }

private:
    std::size_t n_;
    double h_, k_;
};

const PsibarTable& table()
{
    static const PsibarTable t;
    return t;
}

struct LemmaRun {
    double max_residual = 0.0;
    std::vector<double> tau, series;
};

LemmaRun lemma_run(double h, double T, double B, double k)
{
    const std::size_t N = static_cast<std::size_t>(std::llround(B / h));
    DirichletSystem sys(N, h, k);
    std::vector<double> p(N - 1), q(N - 1), dpsi(N - 1), psi(N - 1);
    for (std::size_t m = 0; m < N - 1; ++m) {
        const double e = h * (m + 1);
        p[m] = e * e * std::exp(-e * e / 4.0);
        psi[m] = table()(e);
        dpsi[m] = psibar_prime(e);
    }
    LemmaRun out;
    std::vector<double> Ap;
    auto observe = [&](double t, const std::vector<double>& z) {
        sys.rhs(t, z, Ap);
        const double et = std::exp(-0.5 * t);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t m = 0; m < z.size(); ++m) {
            const double e = h * (m + 1);
            const double Q = e + k * psi[m] * et;
            lhs += (-0.5 * k * psi[m] * et * z[m] + Q * Ap[m]) * h;
            rhs += dpsi[m] * z[m] * h;
        }
        const double r = std::fabs(lhs - k * k * et * et * rhs);
        out.max_residual = std::max(out.max_residual, r);
        out.tau.push_back(t);
        out.series.push_back(r);
    };
    StepControl ctrl{1e-12, 1e-8, 1e-3, 0.5, 1e-12, 3.0};
    TrBdf2 integ(sys, ctrl);
    double t = 0.0;
    observe(0.0, p);
    integ.advance(t, p, T, observe);
    return out;
}

} // namespace

LinearDirichletReport linear_dirichlet_diagnostics(double h, double T, double B)
{
    if (!(B >= 12.0))
        throw UsageError("linear_dirichlet_diagnostics: need B >= 12");
    if (!(h > 0.0 && h <= 0.1) || !(T > 0.0))
        throw UsageError("linear_dirichlet_diagnostics: need 0 < h <= 0.1 and T > 0");
    const double nB = B / h;
    if (std::fabs(nB - std::round(nB)) > 1e-9 * nB)
        throw UsageError("linear_dirichlet_diagnostics: B must be a multiple of h");
    LinearDirichletReport r;
    r.h = h;
    r.B = B;
    r.T = T;
    const std::size_t N = static_cast<std::size_t>(std::llround(nB));

    // (i) steady state and (ii) first moment, no drift term
    {
        DirichletSystem sys(N, h, 0.0);
        std::vector<double> z0(N - 1), w(N - 1);
        for (std::size_t m = 0; m < N - 1; ++m) {
            const double e = h * (m + 1);
            z0[m] = e * std::exp(-e * e / 4.0);
            w[m] = e * e * std::exp(-e * e / 4.0) * (1.0 + std::sin(e));
        }
        StepControl ctrl{1e-13, 1e-9, 1e-3, 0.5, 1e-12, 3.0};
        std::vector<double> z = z0;
        double t = 0.0;
        TrBdf2(sys, ctrl).advance(t, z, T, {});
        for (std::size_t m = 0; m < N - 1; ++m)
            r.steady_drift = std::max(r.steady_drift, std::fabs(z[m] - z0[m]));
        r.steady_drift /= T;
        std::vector<double> f;
        sys.rhs(T, z, f);
        for (double v : f)
            r.steady_rate = std::max(r.steady_rate, std::fabs(v));

        auto moment = [&](const std::vector<double>& v) {
            double s = 0.0;
            for (std::size_t m = 0; m < v.size(); ++m)
                s += h * (m + 1) * v[m] * h;
            return s;
        };
        r.moment_initial = moment(w);
        t = 0.0;
        TrBdf2(sys, ctrl).advance(t, w, T, {});
        r.moment_final = moment(w);
        r.moment_drift = std::fabs(r.moment_final - r.moment_initial) / std::fabs(r.moment_initial) / T;
    }

    // (iii) Q_k identity
    const LemmaRun a = lemma_run(h, T, B, r.k);
    const LemmaRun b = lemma_run(0.5 * h, T, B, r.k);
    r.lemma_residual = a.max_residual;
    r.lemma_residual_half = b.max_residual;
    r.lemma_ratio = b.max_residual > 0.0 ? a.max_residual / b.max_residual : INFINITY;
    r.tau = a.tau;
    r.lemma_series = a.series;
    return r;
}

std::string linear_dirichlet_json(const LinearDirichletReport& r)
{
    nlohmann::json j;
    j["h"] = r.h;
    j["B"] = r.B;
    j["T"] = r.T;
    j["steady_drift"] = r.steady_drift;
    j["steady_rate"] = r.steady_rate;
    j["moment_initial"] = r.moment_initial;
    j["moment_final"] = r.moment_final;
    j["moment_drift"] = r.moment_drift;
    j["k"] = r.k;
    j["lemma_residual"] = r.lemma_residual;
    j["lemma_residual_half"] = r.lemma_residual_half;
    j["lemma_ratio"] = r.lemma_ratio;
    j["tau"] = r.tau;
    j["lemma_series"] = r.lemma_series;
    return j.dump(2);
}

} // namespace kppbbm
