#include "kppbbm/cli.hpp"

#include "kppbbm/bbm.hpp"
#include "kppbbm/constants.hpp"
#include "kppbbm/errors.hpp"
#include "kppbbm/expansion.hpp"
#include "kppbbm/experiments.hpp"
#include "kppbbm/io.hpp"
#include "kppbbm/parallel.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/rinfinity.hpp"
#include "kppbbm/wave.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace kppbbm {

using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& s, const char* what)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::size_t pos = 0;
        double x;
        try {
            x = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || !std::isfinite(x))
            throw UsageError(std::string("bad number '") + item + "' in --" + what);
        v.push_back(x);
    }
    if (v.empty())
        throw UsageError(std::string("--") + what + " is empty");
    return v;
}

void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw UsageError(msg);
}

// JSON config entries as "--key value" tokens.
std::vector<std::string> config_tokens(const json& cfg)
{
    if (!cfg.is_object())
        throw UsageError("config file must hold a JSON object");
    std::vector<std::string> out;
    for (const auto& [k, v] : cfg.items()) {
        if (k == "config" || v.is_null())
            continue;
        const std::string flag = "--" + k;
        if (v.is_boolean()) {
            if (v.get<bool>())
                out.push_back(flag);
        } else if (v.is_string()) {
            out.push_back(flag);
            out.push_back(v.get<std::string>());
        } else if (v.is_array()) {
            std::string joined;
            for (const auto& e : v) {
                if (!joined.empty())
                    joined += ",";
                joined += e.is_string() ? e.get<std::string>() : e.dump();
            }
            out.push_back(flag);
            out.push_back(joined);
        } else if (v.is_number()) {
            out.push_back(flag);
            out.push_back(v.dump());
        } else {
            throw UsageError("config key '" + k + "' has an unsupported type");
        }
    }
    return out;
}

json scalar_from_string(const std::string& s)
{
    if (s.empty())
        return s;
    std::size_t pos = 0;
    try {
        if (s.find_first_of(".eEnN") == std::string::npos && s[0] != '-') {
            const unsigned long long u = std::stoull(s, &pos);
            if (pos == s.size())
                return u;
        }
        const double d = std::stod(s, &pos);
        if (pos == s.size())
            return d;
    } catch (const std::exception&) {
    }
    return s;
}

json effective_config(const CLI::App* sub)
{
    json cfg = json::object();
    for (const CLI::Option* o : sub->get_options()) {
        if (o->get_lnames().empty())
            continue;
        const std::string key = o->get_lnames()[0];
        if (key == "help" || key == "config")
            continue;
        if (o->get_type_size() == 0) {
            cfg[key] = o->count() > 0;
            continue;
        }
        const std::string v = o->count() > 0 ? o->as<std::string>() : o->get_default_str();
        if (v.empty())
            continue;
        if (key.find("list") != std::string::npos || key == "phi" || key == "psi" || key == "out" ||
            key == "cache" || key == "dir" || key == "mode")
            cfg[key] = v;
        else
            cfg[key] = scalar_from_string(v);
    }
    return cfg;
}

// below h = 0.004 the Newton residual floors near 1e-9
double newton_tol(double h) { return h < 0.004 ? 1e-8 : 1e-10; }

WaveSolution make_wave(double h, double x_min, double x_max)
{
    require(h > 0.0 && x_min < x_max, "wave grid: need h > 0 and xmin < xmax");
    return normalize_wave(solve_wave(x_min, x_max, h, newton_tol(h)));
}

json constants_json(const ExpansionConstants& c)
{
    return {{"cbar", c.cbar}, {"cbar1", c.cbar1}, {"g_inf", c.g_inf}, {"k0", c.k0}, {"m1", c.m1}, {"tol", c.tol},
            {"truncation_points", {{"lower", c.lower}, {"upper", c.upper}, {"g_inf", c.g_truncation}}}};
}

struct Common {
    std::string config, out, cache;
    int threads = 0;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON config file (flags override its keys)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--threads", c.threads, "worker count (default: KPPBBM_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--cache", c.cache, "directory caching PDE reference runs");
}

RInfOptions add_rinf_options(CLI::App* sub, RInfOptions& o, const std::string& prefix)
{
    sub->add_option("--" + prefix + "h", o.h, "self-similar grid step")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--" + prefix + "A", o.A, "self-similar half-line cut")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--" + prefix + "T", o.T, "horizon (0: T-factor * ell^2)")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--" + prefix + "T-factor", o.T_factor, "horizon factor")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--" + prefix + "width", o.width, "right margin in units of sqrt(T)")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--" + prefix + "plateau-tol", o.plateau_tol, "relative plateau tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    return o;
}

ExperimentResult run_constants(const std::string& phi_spec, double tol, double wave_h, double xmin, double xmax)
{
    const InitialProfile phi = InitialProfile::parse(phi_spec);
    const WaveSolution wave = make_wave(wave_h, xmin, xmax);
    const ExpansionConstants c = assemble_constants(phi, wave, tol);
    const GInfinityResult g = compute_g_infinity(std::min(tol, 1e-10));
    const double diff = std::fabs(g.scheme_a - g.scheme_b);
    ExperimentResult r;
    r.name = "constants";
    r.passed = diff <= 1e-8 && std::isfinite(c.m1);
    r.summary = constants_json(c);
    r.summary["experiment"] = "constants";
    r.summary["passed"] = r.passed;
    r.summary["profile"] = phi.describe();
    r.summary["g_inf_schemes"] = {{"adaptive", g.scheme_a}, {"romberg_tail", g.scheme_b}, {"difference", diff}};
    r.summary["provenance"] = {{"experiment", "constants"},
                               {"grid", {{"wave_h", wave_h}, {"xmin", xmin}, {"xmax", xmax}}},
                               {"tolerances", {{"tol", tol}, {"g_inf_agreement", 1e-8}}}};
    CsvTable csv({"name", "value"});
    for (const char* k : {"cbar", "cbar1", "g_inf", "k0", "m1"})
        csv.row().cell(std::string(k)).cell(r.summary[k].get<double>());
    r.csv.emplace_back("constants.csv", csv.str());
    return r;
}

ExperimentResult run_wave(double h, double xmin, double xmax)
{
    const WaveSolution w = make_wave(h, xmin, xmax);
    const WaveIdentityResiduals id = wave_identity_checks(w);
    ExperimentResult r;
    r.name = "wave";
    r.passed = std::fabs(id.residual_mass) <= 1e-4 && std::fabs(id.residual_first_moment) <= 1e-3;
    r.summary = json::parse(wave_json(w));
    r.summary["experiment"] = "wave";
    r.summary["passed"] = r.passed;
    r.summary["identities"] = {{"mass", id.mass}, {"first_moment", id.first_moment},
                               {"residual_mass", id.residual_mass}, {"residual_first_moment", id.residual_first_moment}};
    r.summary["provenance"] = {{"experiment", "wave"},
                               {"grid", {{"h", h}, {"xmin", xmin}, {"xmax", xmax}}},
                               {"tolerances", {{"newton", newton_tol(h)}, {"mass", 1e-4}, {"first_moment", 1e-3}}}};
    CsvTable csv({"x", "U", "zbar0"});
    const std::vector<double> U = w.U_values();
    for (std::size_t i = 0; i < w.size(); ++i)
        csv.row().cell(w.x(i)).cell(U[i]).cell(w.z_values()[i]);
    r.csv.emplace_back("wave.csv", csv.str());
    return r;
}

ExperimentResult run_rinf(const std::string& phi_spec, double ell, const RInfOptions& o, const DiskCache& cache)
{
    const InitialProfile phi = InitialProfile::parse(phi_spec);
    require(ell > 0.0, "--ell must be positive");
    const RInfinityEstimate e = cached_r_infinity(ell, phi, o, cache);
    json j = json::parse(rinf_json(e));
    j.erase("samples");
    ExperimentResult r;
    r.name = "rinf";
    r.passed = e.converged;
    r.summary = {{"experiment", "rinf"},
                 {"passed", r.passed},
                 {"profile", phi.describe()},
                 {"estimate", j},
                 {"x_eps", e.value > 0.0 ? json(ell - std::log(e.value)) : json(nullptr)},
                 {"provenance",
                  {{"experiment", "rinf"},
                   {"grid", {{"h", o.h}, {"A", o.A}, {"T", e.T}, {"x_right", e.x_right}}},
                   {"tolerances", {{"plateau_tol", o.plateau_tol}, {"rtol", o.control.rtol}, {"atol", o.control.atol}}}}}};
    CsvTable csv({"t", "tau", "moment", "moment_q", "sink", "z0"});
    for (const auto& m : e.samples)
        csv.row().cell(m.t).cell(m.tau).cell(m.moment).cell(m.moment_q).cell(m.sink).cell(m.z0);
    r.csv.emplace_back("rinf_samples.csv", csv.str());
    return r;
}

ExperimentResult run_bbm_aggregate(double t, std::size_t replicas, std::uint64_t seed, const std::string& psi_spec,
                                   int top_k, bool replica_csv, int threads)
{
    require(t >= 0.0, "--t must be >= 0");
    require(replicas >= 1, "--replicas must be >= 1");
    std::optional<InitialProfile> psi;
    if (!psi_spec.empty())
        psi = InitialProfile::parse(psi_spec);
    std::vector<ExtremalObservables> obs(replicas);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        ObservableRequest q;
        q.psi = psi ? &*psi : nullptr;
        q.top_k = top_k;
        obs[r] = observables(simulate(t, seed, r), q);
    });
    auto column = [&](auto f) {
        std::vector<double> v(replicas);
        for (std::size_t r = 0; r < replicas; ++r)
            v[r] = f(obs[r]);
        return estimate(v, seed);
    };
    auto est_json = [](const MCEstimate& e) { return json{{"mean", e.mean}, {"se", e.std_error}}; };
    ExperimentResult res;
    res.name = "bbm";
    res.passed = true;
    res.summary = {{"experiment", "bbm"},
                   {"passed", true},
                   {"t", t},
                   {"replicas", replicas},
                   {"seed", seed},
                   {"N_t", est_json(column([](const auto& o) { return double(o.n_particles); }))},
                   {"expected_N_t", std::exp(t)},
                   {"max", est_json(column([](const auto& o) { return o.max_pos; }))},
                   {"Z_t", est_json(column([](const auto& o) { return o.Z_t; }))},
                   {"W_t", est_json(column([](const auto& o) { return o.W_t; }))},
                   {"provenance",
                    {{"experiment", "bbm"}, {"seed", seed}, {"replicas", replicas},
                     {"grid", {{"t", t}}}, {"tolerances", json::object()}}}};
    if (psi) {
        res.summary["psi"] = psi->describe();
        res.summary["X_psi"] = est_json(column([](const auto& o) { return o.X_psi; }));
        res.summary["laplace"] = est_json(column([](const auto& o) { return std::exp(-o.X_psi); }));
    }
    if (replica_csv) {
        CsvTable csv({"replica", "t", "N_t", "max", "Z_t", "W_t", "X_psi"});
        for (std::size_t r = 0; r < replicas; ++r)
            csv.row().cell(static_cast<long long>(r)).cell(t).cell(static_cast<long long>(obs[r].n_particles))
                .cell(obs[r].max_pos).cell(obs[r].Z_t).cell(obs[r].W_t).cell(obs[r].X_psi);
        res.csv.emplace_back("replicas.csv", csv.str());
    }
    return res;
}

ExperimentResult run_expand(const std::string& phi_spec, const std::vector<double>& eps, const std::vector<double>& ell,
                            const std::vector<double>& lambda, double Z, double stable_t, double wave_h)
{
    const InitialProfile phi = InitialProfile::parse(phi_spec);
    for (double e : eps)
        require(e > 0.0 && e < std::exp(-2.0), "--eps-list values must lie in (0, e^-2)");
    for (double l : ell)
        require(l >= 2.0, "--ell-list values must be >= 2");
    for (double l : lambda)
        require(l > 0.0, "--lambda-list values must be positive");
    require(stable_t >= 0.0, "--stable-t must be >= 0");
    const ExpansionConstants c = assemble_constants(phi, make_wave(wave_h, -40.0, 40.0));
    CsvTable te({"eps", "ell", "prop11", "thm13"});
    json je = json::array();
    for (double e : eps) {
        const double a = eval_prop11(e, c), b = eval_thm13(e, c);
        te.row().cell(e).cell(-std::log(e)).cell(a).cell(b);
        je.push_back({{"eps", e}, {"prop11", a}, {"thm13", b}});
    }
    CsvTable tl({"ell", "order0", "order1", "order2"});
    json jl = json::array();
    for (double l : ell) {
        const double o0 = c.cbar * l, o1 = o0 + 2.0 * c.cbar * std::log(l), o2 = eval_prop33(l, c);
        tl.row().cell(l).cell(o0).cell(o1).cell(o2);
        jl.push_back({{"ell", l}, {"order0", o0}, {"order1", o1}, {"order2", o2}});
    }
    CsvTable tx({"lambda", "fluctuation_target", "stable"});
    json jx = json::array();
    for (double l : lambda) {
        const double a = laplace_fluctuation_target(l, phi, Z, c), b = laplace_stable(l, stable_t);
        tx.row().cell(l).cell(a).cell(b);
        jx.push_back({{"lambda", l}, {"fluctuation_target", a}, {"stable", b}});
    }
    ExperimentResult r;
    r.name = "expand";
    r.passed = true;
    r.summary = {{"experiment", "expand"}, {"passed", true}, {"profile", phi.describe()},
                 {"constants", constants_json(c)}, {"eps", je}, {"ell", jl}, {"lambda", jx},
                 {"Z", Z}, {"stable_t", stable_t},
                 {"provenance", {{"experiment", "expand"}, {"grid", {{"wave_h", wave_h}}},
                                 {"tolerances", {{"constants", c.tol}}}}}};
    r.csv.emplace_back("expand_eps.csv", te.str());
    r.csv.emplace_back("expand_ell.csv", tl.str());
    r.csv.emplace_back("expand_lambda.csv", tx.str());
    return r;
}

ExperimentResult run_report(const std::string& dir)
{
    namespace fs = std::filesystem;
    require(fs::is_directory(dir), "report: '" + dir + "' is not a directory");
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "summary.json")
            found.push_back(e.path());
    std::sort(found.begin(), found.end());
    CsvTable csv({"path", "experiment", "passed", "provenance_missing"});
    json rows = json::array();
    bool all = !found.empty();
    for (const auto& p : found) {
        json s;
        try {
            s = json::parse(read_file(p.string()));
        } catch (const json::exception& e) {
            throw NumericError("report: cannot parse " + p.string() + ": " + e.what());
        }
        const auto missing = audit_provenance(s);
        const bool passed = s.value("passed", false) && missing.empty();
        all = all && passed;
        std::string m;
        for (const auto& k : missing)
            m += (m.empty() ? "" : ";") + k;
        const std::string rel = fs::relative(p, dir).string();
        const std::string exp = s.value("experiment", std::string("unknown"));
        csv.row().cell(rel).cell(exp).cell(passed).cell(m);
        rows.push_back({{"path", rel}, {"experiment", exp}, {"passed", passed}, {"provenance_missing", missing}});
    }
    ExperimentResult r;
    r.name = "report";
    r.passed = all;
    r.summary = {{"experiment", "report"}, {"passed", all}, {"summaries", rows},
                 {"provenance", {{"experiment", "report"}, {"grid", {{"dir", dir}}}, {"tolerances", json::object()}}}};
    r.csv.emplace_back("report.csv", csv.str());
    return r;
}

} // namespace

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    const auto started_clock = std::chrono::steady_clock::now();
    const std::string started = utc_timestamp();

    CLI::App app{"kppbbm: KPP fronts, shifts and branching Brownian motion"};
    app.set_help_flag("--help", "print this help and exit");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    Common common;

    // constants
    std::string phi = "box:-1:0", psi = "box:-1:0";
    double tol = 1e-10, wave_h = 0.005, xmin = -40.0, xmax = 40.0;
    auto* c_const = app.add_subcommand("constants", "profile constants cbar, cbar1, g_inf, k0, m1");
    c_const->add_option("--phi", phi, "profile box:a:b[:h] | step[:h] | table:<path>")->capture_default_str();
    c_const->add_option("--tol", tol, "quadrature tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    c_const->add_option("--wave-h", wave_h, "wave grid step")->check(CLI::PositiveNumber)->capture_default_str();
    c_const->add_option("--xmin", xmin, "wave grid left end")->capture_default_str();
    c_const->add_option("--xmax", xmax, "wave grid right end")->capture_default_str();
    add_common(c_const, common);

    // wave
    double h = 0.005;
    auto* c_wave = app.add_subcommand("wave", "traveling wave and its integral identities");
    c_wave->add_option("--h", h, "grid step")->check(CLI::PositiveNumber)->capture_default_str();
    c_wave->add_option("--xmin", xmin, "left end")->capture_default_str();
    c_wave->add_option("--xmax", xmax, "right end")->capture_default_str();
    add_common(c_wave, common);

    // shift
    ShiftRoutesOptions sro;
    double eps = 1e-4;
    auto* c_shift = app.add_subcommand("shift", "Bramson shift by the direct and selfsimilar routes");
    c_shift->add_option("--phi", phi, "profile")->capture_default_str();
    c_shift->add_option("--eps", eps, "data scale, phi = eps * profile")->check(CLI::PositiveNumber)->capture_default_str();
    c_shift->add_option("--h", sro.h, "direct route grid step")->check(CLI::PositiveNumber)->capture_default_str();
    c_shift->add_option("--T", sro.T, "direct route horizon")->check(CLI::PositiveNumber)->capture_default_str();
    c_shift->add_option("--level", sro.shift.level, "front level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_shift->add_option("--covariance-shift", sro.covariance_shift, "profile shift for the covariance check")->capture_default_str();
    c_shift->add_option("--wave-h", wave_h, "wave grid step")->check(CLI::PositiveNumber)->capture_default_str();
    add_rinf_options(c_shift, sro.rinf, "rinf-");
    add_common(c_shift, common);

    // rinf
    RInfOptions rio;
    double ell = 10.0;
    auto* c_rinf = app.add_subcommand("rinf", "limiting first moment r_inf(ell) of the selfsimilar solution");
    c_rinf->add_option("--phi", phi, "profile")->capture_default_str();
    c_rinf->add_option("--ell", ell, "log(1/eps)")->check(CLI::PositiveNumber)->capture_default_str();
    add_rinf_options(c_rinf, rio, "");
    add_common(c_rinf, common);

    // decompose
    ShiftExpansionOptions seo;
    std::string ell_list = "10,20,40";
    auto* c_dec = app.add_subcommand("decompose", "r_inf over ell against the expansion, with its decomposition");
    c_dec->add_option("--phi", phi, "profile")->capture_default_str();
    c_dec->add_option("--ell-list", ell_list, "comma separated ell values")->capture_default_str();
    c_dec->add_option("--covariance-shift", seo.covariance_shift, "profile shift for the covariance column")->capture_default_str();
    c_dec->add_option("--wave-h", wave_h, "wave grid step")->check(CLI::PositiveNumber)->capture_default_str();
    add_rinf_options(c_dec, seo.rinf, "");
    add_common(c_dec, common);

    // bbm
    std::string mode = "aggregate", t_list = "2,4,6,8", n_list = "2,3,4", lambda_list = "0.5,1,2";
    std::string bbm_psi;
    double t = 4.0;
    std::size_t replicas = 10000;
    std::uint64_t seed = 42;
    int top_k = 10;
    bool replica_csv = false;
    auto* c_bbm = app.add_subcommand("bbm", "branching Brownian motion observables");
    c_bbm->add_option("--mode", mode, "aggregate | martingale | extremal")
        ->check(CLI::IsMember({"aggregate", "martingale", "extremal"}))->capture_default_str();
    c_bbm->add_option("--t", t, "time (aggregate, extremal)")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_bbm->add_option("--t-list", t_list, "times (martingale)")->capture_default_str();
    c_bbm->add_option("--n-list", n_list, "n values (extremal)")->capture_default_str();
    c_bbm->add_option("--lambda-list", lambda_list, "Laplace arguments (extremal)")->capture_default_str();
    c_bbm->add_option("--replicas", replicas, "replica count")->check(CLI::PositiveNumber)->capture_default_str();
    c_bbm->add_option("--seed", seed, "master seed")->capture_default_str();
    c_bbm->add_option("--psi", bbm_psi, "test function for X_t(psi)");
    c_bbm->add_option("--top-k", top_k, "order statistics kept")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_bbm->add_flag("--replica-csv", replica_csv, "write per-replica rows");
    c_bbm->add_option("--wave-h", wave_h, "wave grid step (extremal)")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(c_bbm, common);

    // mckean
    double pde_h = 0.01, x_lo = NAN, x_hi = NAN;
    std::size_t points = 30;
    auto* c_mck = app.add_subcommand("mckean", "P[max > x] against u(t,x) with Heaviside data");
    c_mck->add_option("--t", t, "time")->capture_default_str();
    c_mck->add_option("--replicas", replicas, "replica count")->check(CLI::PositiveNumber)->capture_default_str();
    c_mck->add_option("--seed", seed, "master seed")->capture_default_str();
    c_mck->add_option("--h", pde_h, "PDE grid step")->check(CLI::PositiveNumber)->capture_default_str();
    c_mck->add_option("--x-min", x_lo, "grid start (default m(t) - 6)");
    c_mck->add_option("--x-max", x_hi, "grid end (default m(t) + 6)");
    c_mck->add_option("--points", points, "grid points")->check(CLI::Range(2, 100000))->capture_default_str();
    add_common(c_mck, common);

    // duality
    DualityOptions dop;
    std::string trend_list = "4,8,12";
    auto* c_dual = app.add_subcommand("duality", "E exp(-X_t(psi)) against 1 - u(t, m(t))");
    c_dual->add_option("--psi", psi, "test function")->capture_default_str();
    c_dual->add_option("--t", t, "time")->capture_default_str();
    c_dual->add_option("--replicas", replicas, "replica count")->check(CLI::PositiveNumber)->capture_default_str();
    c_dual->add_option("--seed", seed, "master seed")->capture_default_str();
    c_dual->add_option("--h", pde_h, "PDE grid step")->check(CLI::PositiveNumber)->capture_default_str();
    c_dual->add_option("--trend-list", trend_list, "times of the trend display")->capture_default_str();
    c_dual->add_option("--limit-T", dop.limit_T, "horizon of the wave-limit run (0 skips)")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_dual->add_option("--limit-h", dop.limit_h, "grid step of the wave-limit run")->check(CLI::PositiveNumber)->capture_default_str();
    c_dual->add_option("--wave-h", wave_h, "wave grid step")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(c_dual, common);

    // expand
    std::string eps_list = "1e-2,1e-4,1e-8", lam_list = "0.25,0.5,1,2,4";
    double Z = 1.0, stable_t = 1.0;
    auto* c_exp = app.add_subcommand("expand", "expansion tables over eps, ell and lambda");
    c_exp->add_option("--phi", phi, "profile")->capture_default_str();
    c_exp->add_option("--eps-list", eps_list, "eps values")->capture_default_str();
    c_exp->add_option("--ell-list", ell_list, "ell values")->capture_default_str();
    c_exp->add_option("--lambda-list", lam_list, "lambda values")->capture_default_str();
    c_exp->add_option("--Z", Z, "derivative martingale limit value")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_exp->add_option("--stable-t", stable_t, "time of the stable Laplace transform")->capture_default_str();
    c_exp->add_option("--wave-h", wave_h, "wave grid step")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(c_exp, common);

    // report
    std::string report_dir;
    auto* c_rep = app.add_subcommand("report", "aggregate and audit summary.json files");
    c_rep->add_option("--dir", report_dir, "directory searched recursively")->required();
    add_common(c_rep, common);

    std::string config_hash;
    try {
        // config keys are spliced in right after the subcommand so later flags win
        std::vector<std::string> tokens(args.begin() + 1, args.end());
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::string path;
            if (tokens[i] == "--config" && i + 1 < tokens.size())
                path = tokens[i + 1];
            else if (tokens[i].rfind("--config=", 0) == 0)
                path = tokens[i].substr(9);
            if (path.empty())
                continue;
            const std::string text = read_file(path);
            config_hash = sha256_hex(text);
            json cfg;
            try {
                cfg = json::parse(text);
            } catch (const json::exception& e) {
                throw UsageError("config '" + path + "': " + e.what());
            }
            if (cfg.is_object() && cfg.contains("schema_version") && cfg.contains("config")) {
                if (cfg.contains("command") && !tokens.empty() && cfg["command"] != tokens[0])
                    throw UsageError("manifest was written by '" + cfg["command"].get<std::string>() + "'");
                cfg = cfg["config"];
            }
            const auto extra = config_tokens(cfg);
            tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
            break;
        }
        std::reverse(tokens.begin(), tokens.end());
        app.parse(tokens);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    ExperimentResult result;
    std::uint64_t manifest_seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;
    try {
        for (const std::string* spec : {&phi, &psi, &bbm_psi})
            if (spec->rfind("table:", 0) == 0)
                inputs.emplace_back(spec->substr(6), sha256_hex(read_file(spec->substr(6))));
        if (!config_hash.empty())
            inputs.emplace_back("config", config_hash);
        if (!common.out.empty() && std::filesystem::exists(common.out) && !std::filesystem::is_directory(common.out))
            throw UsageError("--out '" + common.out + "' is not a directory");

        ExperimentContext ctx;
        ctx.threads = common.threads;
        ctx.cache = DiskCache(common.cache);
        resolve_threads(common.threads);

        if (command == "constants") {
            result = run_constants(phi, tol, wave_h, xmin, xmax);
        } else if (command == "wave") {
            result = run_wave(h, xmin, xmax);
        } else if (command == "shift") {
            require(eps < 0.5, "--eps must be < 0.5");
            const InitialProfile p = InitialProfile::parse(phi);
            result = shift_routes_experiment(p, eps, make_wave(wave_h, -40.0, 40.0), ctx, sro);
        } else if (command == "rinf") {
            result = run_rinf(phi, ell, rio, ctx.cache);
        } else if (command == "decompose") {
            const InitialProfile p = InitialProfile::parse(phi);
            const ExpansionConstants c = assemble_constants(p, make_wave(wave_h, -40.0, 40.0));
            result = shift_expansion_experiment(p, parse_list(ell_list, "ell-list"), c, ctx, seo);
        } else if (command == "bbm") {
            manifest_seed = seed;
            if (mode == "aggregate") {
                result = run_bbm_aggregate(t, replicas, seed, bbm_psi, top_k, replica_csv, common.threads);
            } else if (mode == "martingale") {
                result = martingale_suite(parse_list(t_list, "t-list"), replicas, seed, ctx);
            } else {
                const ExpansionConstants c =
                    assemble_constants(InitialProfile::step(), make_wave(wave_h, -40.0, 40.0));
                result = extremal_rescaled(t, parse_list(n_list, "n-list"), replicas, seed, c, ctx,
                                           parse_list(lambda_list, "lambda-list"));
            }
        } else if (command == "mckean") {
            manifest_seed = seed;
            require(t >= 2.0, "--t must be >= 2");
            const double m = bramson_m(t);
            const double a = std::isfinite(x_lo) ? x_lo : m - 6.0;
            const double b = std::isfinite(x_hi) ? x_hi : m + 6.0;
            require(a < b, "--x-min must be below --x-max");
            std::vector<double> grid(points);
            for (std::size_t k = 0; k < points; ++k)
                grid[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1);
            ctx.h = pde_h;
            result = mckean_check(t, grid, replicas, seed, ctx);
        } else if (command == "duality") {
            manifest_seed = seed;
            ctx.h = pde_h;
            dop.trend_times = parse_list(trend_list, "trend-list");
            const InitialProfile p = InitialProfile::parse(psi);
            std::optional<WaveSolution> w;
            if (dop.limit_T > 0.0)
                w = make_wave(wave_h, -40.0, 40.0);
            result = duality_check(p, t, replicas, seed, ctx, w ? &*w : nullptr, dop);
        } else if (command == "expand") {
            result = run_expand(phi, parse_list(eps_list, "eps-list"), parse_list(ell_list, "ell-list"),
                                parse_list(lam_list, "lambda-list"), Z, stable_t, wave_h);
        } else {
            result = run_report(report_dir);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::cout << result.summary.dump(2) << std::endl;
    if (!common.out.empty()) {
        try {
            RunManifest m;
            m.command = command;
            m.config = effective_config(sub);
            m.seed = manifest_seed;
            m.input_hashes = inputs;
            m.started = started;
            m.finished = utc_timestamp();
            m.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started_clock).count();
            persist(m, result, common.out);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return result.passed ? 0 : 1;
}

} // namespace kppbbm
