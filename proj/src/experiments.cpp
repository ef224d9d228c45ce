#include "kppbbm/experiments.hpp"

#include "kppbbm/errors.hpp"
#include "kppbbm/expansion.hpp"
#include "kppbbm/fit.hpp"
#include "kppbbm/io.hpp"
#include "kppbbm/parallel.hpp"
#include "kppbbm/pde.hpp"
#include "kppbbm/wave.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace kppbbm {

using nlohmann::json;

namespace {

constexpr double kInvSqrt4Pi = 0.28209479177387814347;

json control_json(const StepControl& c)
{
    return {{"atol", c.atol}, {"rtol", c.rtol}, {"dt_init", c.dt_init}, {"dt_max", c.dt_max},
            {"dt_min", c.dt_min}, {"max_growth", c.max_growth}};
}

json rinf_key(double ell, const InitialProfile& profile, const RInfOptions& o)
{
    return {{"kind", "r_infinity"}, {"version", kVersion}, {"ell", ell}, {"profile", profile.fingerprint()},
            {"h", o.h}, {"A", o.A}, {"width", o.width}, {"T", o.T}, {"T_factor", o.T_factor},
            {"plateau_tol", o.plateau_tol}, {"samples_per_decade", o.samples_per_decade},
            {"control", control_json(o.control)}};
}

bool strictly_decreasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1]))
            return false;
    return true;
}

bool strictly_increasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            return false;
    return true;
}

std::vector<double> abs_of(std::vector<double> v)
{
    for (double& x : v)
        x = std::fabs(x);
    return v;
}

void require_replicas(std::size_t replicas)
{
    if (replicas == 0)
        throw UsageError("replicas must be >= 1");
}

} // namespace

std::string DiskCache::path_for(const json& key) const
{
    return (std::filesystem::path(dir_) / (sha256_hex(key.dump()) + ".json")).string();
}

std::optional<json> DiskCache::get(const json& key) const
{
    if (!enabled())
        return std::nullopt;
    const std::string p = path_for(key);
    if (!std::filesystem::exists(p))
        return std::nullopt;
    try {
        const json doc = json::parse(read_file(p));
        if (doc.at("key") != key)
            return std::nullopt;
        return doc.at("value");
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void DiskCache::put(const json& key, const json& value) const
{
    if (!enabled())
        return;
    atomic_write(path_for(key), json{{"key", key}, {"value", value}}.dump());
}

json DiskCache::get_or(const json& key, const std::function<json()>& compute) const
{
    if (auto v = get(key))
        return *v;
    json v = compute();
    put(key, v);
    return v;
}

json RunManifest::to_json() const
{
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["module_versions"] = {{"kppbbm", kVersion}, {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    json in = json::object();
    for (const auto& [k, v] : input_hashes)
        in[k] = v;
    j["input_hashes"] = in;
    j["outputs"] = outputs;
    json out = json::object();
    for (const auto& [k, v] : output_hashes)
        out[k] = v;
    j["output_hashes"] = out;
    j["wall_seconds"] = wall_seconds;
    j["started"] = started;
    j["finished"] = finished;
    return j;
}

std::vector<std::string> persist(RunManifest manifest, const ExperimentResult& result, const std::string& out_dir)
{
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    for (const auto& [name, content] : result.csv) {
        const std::string p = (fs::path(out_dir) / name).string();
        atomic_write(p, content);
        manifest.outputs.push_back(name);
        manifest.output_hashes.emplace_back(name, sha256_hex(content));
        paths.push_back(p);
    }
    const std::string summary = result.summary.dump(2) + "\n";
    const std::string sp = (fs::path(out_dir) / "summary.json").string();
    atomic_write(sp, summary);
    manifest.outputs.push_back("summary.json");
    manifest.output_hashes.emplace_back("summary.json", sha256_hex(summary));
    paths.push_back(sp);
    const std::string mp = (fs::path(out_dir) / "manifest.json").string();
    atomic_write(mp, manifest.to_json().dump(2) + "\n");
    paths.push_back(mp);
    return paths;
}

std::vector<std::string> audit_provenance(const json& summary)
{
    std::vector<std::string> missing;
    if (!summary.is_object() || !summary.contains("provenance") || !summary["provenance"].is_object())
        return {"provenance"};
    const json& p = summary["provenance"];
    for (const char* k : {"experiment", "grid", "tolerances"})
        if (!p.contains(k))
            missing.push_back(std::string("provenance.") + k);
    if (p.contains("replicas") && !p.contains("seed"))
        missing.push_back("provenance.seed");
    if (!summary.contains("passed"))
        missing.push_back("passed");
    return missing;
}

RInfinityEstimate cached_r_infinity(double ell, const InitialProfile& profile, const RInfOptions& opts,
                                    const DiskCache& cache)
{
    const json key = rinf_key(ell, profile, opts);
    const json v = cache.get_or(key, [&] { return json::parse(rinf_json(r_infinity(ell, profile, opts))); });
    return rinf_from_json(v.dump());
}

ExperimentResult mckean_check(double t, const std::vector<double>& x_grid, std::size_t replicas, std::uint64_t seed,
                              const ExperimentContext& ctx)
{
    if (!(t >= 2.0))
        throw UsageError("mckean_check: need t >= 2");
    if (x_grid.empty())
        throw UsageError("mckean_check: empty x grid");
    require_replicas(replicas);

    std::vector<double> maxima(replicas);
    parallel_for(replicas, resolve_threads(ctx.threads), [&](std::size_t r) {
        const BBMPopulation p = simulate(t, seed, r);
        maxima[r] = *std::max_element(p.positions.begin(), p.positions.end());
    });

    LabOptions lo;
    lo.x_left = -std::max(30.0, 2.0 * t + 6.0 * std::sqrt(t) + 30.0);
    const json key = {{"kind", "mckean_pde"}, {"version", kVersion}, {"t", t}, {"h", ctx.h}, {"x", x_grid},
                      {"x_left", lo.x_left}, {"control", control_json(lo.control)}};
    const json uj = ctx.cache.get_or(key, [&] {
        const Trajectory tr = solve_lab(InitialProfile::step(1.0, 0.0), 1.0, ctx.h, t, lo);
        std::vector<double> u;
        for (double x : x_grid)
            u.push_back(tr.snapshots.back().interpolate(x));
        return json(u);
    });
    const std::vector<double> u = uj.get<std::vector<double>>();

    CsvTable csv({"x", "p_hat", "se", "u", "abs_diff_over_se", "band", "pass"});
    bool all = true, monotone = true;
    double max_diff = 0.0, prev = INFINITY;
    std::vector<double> ind(replicas);
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        for (std::size_t r = 0; r < replicas; ++r)
            ind[r] = maxima[r] > x_grid[k] ? 1.0 : 0.0;
        const MCEstimate e = estimate(ind, seed);
        const double diff = std::fabs(e.mean - u[k]);
        const double band = std::max(3.0 * e.std_error, 0.01);
        const bool pass = diff <= band;
        all = all && pass;
        max_diff = std::max(max_diff, diff);
        if (k > 0 && x_grid[k] > x_grid[k - 1] && e.mean > prev)
            monotone = false;
        prev = e.mean;
        csv.row().cell(x_grid[k]).cell(e.mean).cell(e.std_error).cell(u[k])
            .cell(e.std_error > 0.0 ? diff / e.std_error : (diff > 0.0 ? INFINITY : 0.0)).cell(band).cell(pass);
    }
    ExperimentResult res;
    res.name = "mckean";
    res.passed = all && monotone;
    res.summary = {{"experiment", "mckean"},
                   {"passed", res.passed},
                   {"all_points_in_band", all},
                   {"monotone", monotone},
                   {"max_abs_diff", max_diff},
                   {"t", t},
                   {"points", x_grid.size()},
                   {"provenance",
                    {{"experiment", "mckean"},
                     {"seed", seed},
                     {"replicas", replicas},
                     {"grid", {{"h", ctx.h}, {"x_left", lo.x_left}, {"x", x_grid}}},
                     {"tolerances", {{"band_se", 3.0}, {"band_floor", 0.01}, {"control", control_json(lo.control)}}}}}};
    res.csv.emplace_back("mckean.csv", csv.str());
    return res;
}

ExperimentResult duality_check(const InitialProfile& psi, double t, std::size_t replicas, std::uint64_t seed,
                               const ExperimentContext& ctx, const WaveSolution* wave, const DualityOptions& opts)
{
    if (!(t >= 1.0))
        throw UsageError("duality_check: need t >= 1");
    require_replicas(replicas);
    const InitialProfile psi_hat = hat_transform(psi);
    const MCEstimate emp = empirical_laplace_Xt(psi, t, replicas, seed, ctx.threads);

    std::vector<double> times = opts.trend_times;
    times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const double T = times.back();
    LabOptions lo;
    lo.x_left = -(2.0 * T + 6.0 * std::sqrt(T) + 30.0);
    lo.output_times = times;
    const json key = {{"kind", "duality_pde"}, {"version", kVersion}, {"psi", psi.fingerprint()}, {"times", times},
                      {"h", ctx.h}, {"x_left", lo.x_left}, {"control", control_json(lo.control)}};
    const json pj = ctx.cache.get_or(key, [&] {
        std::vector<double> v;
        if (psi_hat.is_zero()) {
            v.assign(times.size(), 1.0);
        } else {
            const Trajectory tr = solve_lab(psi_hat, 1.0, ctx.h, T, lo);
            for (double tk : times)
                for (const auto& s : tr.snapshots)
                    if (std::fabs(s.time - tk) <= 1e-9 * (1.0 + tk))
                        v.push_back(1.0 - s.interpolate(bramson_m(tk)));
        }
        return json(v);
    });
    const std::vector<double> pde = pj.get<std::vector<double>>();
    if (pde.size() != times.size())
        throw NumericError("duality_check: missing PDE snapshot");
    double pde_value = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] == t)
            pde_value = pde[k];

    std::optional<double> s_hat, limit;
    if (psi.is_zero()) {
        limit = 1.0;
    } else if (wave && opts.limit_T > 0.0) {
        LabOptions bo;
        bo.frame = Frame::Bramson;
        for (double tk = 20.0; tk <= opts.limit_T + 1e-9; tk += 5.0)
            bo.output_times.push_back(tk);
        const json skey = {{"kind", "duality_shift"}, {"version", kVersion}, {"psi", psi.fingerprint()},
                           {"T", opts.limit_T}, {"h", opts.limit_h}, {"control", control_json(bo.control)}};
        const json sj = ctx.cache.get_or(skey, [&] {
            const Trajectory tr = solve_lab(psi_hat, 1.0, opts.limit_h, opts.limit_T, bo);
            ShiftOptions so;
            so.t_start = 20.0;
            return json(extract_shift_direct(tr, *wave, so).s_hat);
        });
        s_hat = sj.get<double>();
        limit = laplace_extremal(psi, *s_hat, *wave);
    }

    CsvTable trend({"t", "pde_value", "distance_to_limit"});
    std::vector<double> dist, trend_vals;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::find(opts.trend_times.begin(), opts.trend_times.end(), times[k]) == opts.trend_times.end())
            continue;
        const double d = limit ? std::fabs(pde[k] - *limit) : NAN;
        dist.push_back(d);
        trend_vals.push_back(pde[k]);
        trend.row().cell(times[k]).cell(pde[k]).cell(d);
    }
    bool trend_ok;
    if (limit)
        trend_ok = strictly_decreasing(dist) || *std::max_element(dist.begin(), dist.end()) == 0.0;
    else
        trend_ok = strictly_decreasing(trend_vals) || strictly_increasing(trend_vals);

    const double diff = std::fabs(emp.mean - pde_value);
    const bool pass = emp.std_error > 0.0 ? diff <= 3.0 * emp.std_error : diff <= 1e-12;
    CsvTable csv({"t", "empirical", "se", "pde_value", "wave_limit", "s_hat_psi_hat", "abs_diff_over_se", "pass"});
    csv.row().cell(t).cell(emp.mean).cell(emp.std_error).cell(pde_value).cell(limit ? *limit : NAN)
        .cell(s_hat ? *s_hat : NAN).cell(emp.std_error > 0.0 ? diff / emp.std_error : 0.0).cell(pass);

    ExperimentResult res;
    res.name = "duality";
    res.passed = pass;
    res.summary = {{"experiment", "duality"},
                   {"passed", pass},
                   {"psi", psi.describe()},
                   {"t", t},
                   {"empirical", emp.mean},
                   {"se", emp.std_error},
                   {"pde_value", pde_value},
                   {"wave_limit", limit ? json(*limit) : json(nullptr)},
                   {"s_hat_psi_hat", s_hat ? json(*s_hat) : json(nullptr)},
                   {"trend_toward_limit", trend_ok},
                   {"provenance",
                    {{"experiment", "duality"},
                     {"seed", seed},
                     {"replicas", replicas},
                     {"grid", {{"h", ctx.h}, {"x_left", lo.x_left}, {"limit_h", opts.limit_h}, {"limit_T", opts.limit_T}}},
                     {"tolerances", {{"band_se", 3.0}, {"control", control_json(lo.control)}}}}}};
    res.csv.emplace_back("duality.csv", csv.str());
    res.csv.emplace_back("duality_trend.csv", trend.str());
    return res;
}

ExperimentResult shift_expansion_experiment(const InitialProfile& profile, const std::vector<double>& ell_list,
                                            const ExpansionConstants& c, const ExperimentContext& ctx,
                                            const ShiftExpansionOptions& opts)
{
    if (ell_list.size() < 3)
        throw UsageError("shift_expansion_experiment: need at least 3 values of ell");
    for (std::size_t i = 0; i < ell_list.size(); ++i)
        if (!(ell_list[i] >= 2.0) || (i > 0 && !(ell_list[i] > ell_list[i - 1])))
            throw UsageError("shift_expansion_experiment: ell values must be >= 2 and increasing");
    if (!(c.cbar > 0.0))
        throw NumericError("shift_expansion_experiment: cbar must be positive");

    const std::size_t n = ell_list.size();
    const bool cov = opts.covariance_shift != 0.0;
    const InitialProfile shifted = profile.shifted(opts.covariance_shift);
    std::vector<RInfinityEstimate> runs(n), runs_cov(cov ? n : 0);
    parallel_for(cov ? 2 * n : n, resolve_threads(ctx.threads), [&](std::size_t k) {
        if (k < n)
            runs[k] = cached_r_infinity(ell_list[k], profile, opts.rinf, ctx.cache);
        else
            runs_cov[k - n] = cached_r_infinity(ell_list[k - n], shifted, opts.rinf, ctx.cache);
    });

    std::vector<std::string> header{"ell", "r_inf", "converged", "plateau_drift", "order0", "order1", "order2",
                                    "res0", "res1", "res2", "x_eps", "thm13", "prop11", "Q_ell", "Y_ell",
                                    "E_ell", "E_direct", "closure", "Q_asymptotic", "Y_asymptotic"};
    if (cov) {
        header.push_back("x_eps_shifted");
        header.push_back("covariance_error");
    }
    CsvTable csv(header);
    std::vector<double> r, res0, res1, res2, qgap, ygap, E, cov_err;
    bool converged = true;
    for (std::size_t k = 0; k < n; ++k) {
        const double L = ell_list[k];
        const RInfinityEstimate& e = runs[k];
        const Decomposition d = decompose_r_infinity(e, profile, c);
        const double o0 = c.cbar * L;
        const double o1 = o0 + 2.0 * c.cbar * std::log(L);
        const double o2 = eval_prop33(L, c);
        const double x = L - std::log(e.value);
        const double eps = std::exp(-L);
        r.push_back(e.value);
        res0.push_back(e.value - o0);
        res1.push_back(e.value - o1);
        res2.push_back(e.value - o2);
        qgap.push_back(d.Q_ell - d.Q_asymptotic);
        ygap.push_back(d.Y_ell - d.Y_asymptotic);
        E.push_back(d.E_ell);
        converged = converged && e.converged;
        csv.row().cell(L).cell(e.value).cell(e.converged).cell(e.plateau_drift).cell(o0).cell(o1).cell(o2)
            .cell(res0.back()).cell(res1.back()).cell(res2.back()).cell(x).cell(eval_thm13(eps, c))
            .cell(eval_prop11(eps, c)).cell(d.Q_ell).cell(d.Y_ell).cell(d.E_ell).cell(d.E_direct).cell(d.closure)
            .cell(d.Q_asymptotic).cell(d.Y_asymptotic);
        if (cov) {
            const double xs = L - std::log(runs_cov[k].value);
            cov_err.push_back(xs - (x - opts.covariance_shift));
            csv.cell(xs).cell(cov_err.back());
        }
    }

    const LinearFit plain = line_fit(ell_list, r);
    std::vector<double> rc(n);
    for (std::size_t k = 0; k < n; ++k)
        rc[k] = r[k] - 2.0 * c.cbar * std::log(ell_list[k]);
    const LinearFit corrected = line_fit(ell_list, rc);
    std::vector<double> logl, logres;
    for (std::size_t k = 0; k < n; ++k) {
        logl.push_back(std::log(ell_list[k]));
        logres.push_back(std::log(std::fabs(res2[k])));
    }
    const LinearFit decay = line_fit(logl, logres);

    const double slope_err = std::fabs(plain.coef[1] - c.cbar) / c.cbar;
    const double slope_err_corr = std::fabs(corrected.coef[1] - c.cbar) / c.cbar;
    const bool order0_grows = strictly_increasing(res0);
    const bool order1_bounded = std::fabs(res1.back() - res1.front()) <= 0.5 * std::fabs(res0.back() - res0.front());
    const bool order2_decreasing = strictly_decreasing(abs_of(res2));
    const bool q_trend = strictly_decreasing(abs_of(qgap));
    const bool y_trend = strictly_decreasing(abs_of(ygap));
    const double leading = std::fabs(r.back() / ell_list.back() - c.cbar) / c.cbar;
    double max_cov = 0.0;
    for (double v : cov_err)
        max_cov = std::max(max_cov, std::fabs(v));

    ExperimentResult res;
    res.name = "shift_expansion";
    res.passed = order0_grows && order2_decreasing && slope_err <= 0.02 && (!cov || max_cov <= 0.02);
    res.summary = {
        {"experiment", "shift_expansion"},
        {"passed", res.passed},
        {"profile", profile.describe()},
        {"ell", ell_list},
        {"r_inf", r},
        {"all_converged", converged},
        {"constants", {{"cbar", c.cbar}, {"cbar1", c.cbar1}, {"g_inf", c.g_inf}, {"k0", c.k0}, {"m1", c.m1}}},
        {"order0_residual_grows", order0_grows},
        {"order1_residual_bounded", order1_bounded},
        {"order2_residual_decreasing", order2_decreasing},
        {"residual_decay_exponent", decay.coef[1]},
        {"leading_relative_error_at_max_ell", leading},
        {"slope_plain", plain.coef[1]},
        {"slope_plain_relative_error", slope_err},
        {"slope_log_corrected", corrected.coef[1]},
        {"slope_log_corrected_relative_error", slope_err_corr},
        {"Q_gap", qgap},
        {"Q_gap_decreasing", q_trend},
        {"Y_gap", ygap},
        {"Y_gap_decreasing", y_trend},
        {"E_ell", E},
        {"E_decreasing", strictly_decreasing(abs_of(E))},
        {"E_small_at_max_ell", std::fabs(E.back()) <= 0.05 * c.cbar},
        {"covariance_shift", opts.covariance_shift},
        {"covariance_max_error", cov ? json(max_cov) : json(nullptr)},
        {"provenance",
         {{"experiment", "shift_expansion"},
          {"grid", {{"h", opts.rinf.h}, {"A", opts.rinf.A}, {"width", opts.rinf.width}, {"T_factor", opts.rinf.T_factor}}},
          {"tolerances",
           {{"plateau_tol", opts.rinf.plateau_tol}, {"control", control_json(opts.rinf.control)},
            {"slope", 0.02}, {"covariance", 0.02}}}}}};
    res.csv.emplace_back("shift_expansion.csv", csv.str());
    for (std::size_t k = 0; k < n; ++k) {
        CsvTable s({"t", "tau", "moment", "moment_q", "sink", "z0"});
        for (const auto& m : runs[k].samples)
            s.row().cell(m.t).cell(m.tau).cell(m.moment).cell(m.moment_q).cell(m.sink).cell(m.z0);
        res.csv.emplace_back("rinf_samples_ell" + fmt_double(ell_list[k]) + ".csv", s.str());
    }
    return res;
}

ExperimentResult shift_routes_experiment(const InitialProfile& profile, double eps, const WaveSolution& wave,
                                         const ExperimentContext& ctx, const ShiftRoutesOptions& opts)
{
    if (!(eps > 0.0 && eps < 0.5))
        throw UsageError("shift_routes_experiment: eps must be in (0, 0.5)");
    if (profile.is_zero())
        throw NumericError("shift_routes_experiment: zero profile, shift undefined");
    if (!(opts.T >= 500.0))
        throw UsageError("shift_routes_experiment: need T >= 500");
    const double ell = std::log(1.0 / eps);
    const double t_start = std::max(20.0, 2.0 * ell + 10.0);

    LabOptions bo;
    bo.frame = Frame::Bramson;
    for (double t = t_start; t <= opts.T + 1e-9; t += 5.0)
        bo.output_times.push_back(t);
    const json key = {{"kind", "direct_offsets"}, {"version", kVersion}, {"profile", profile.fingerprint()},
                      {"eps", eps}, {"h", opts.h}, {"T", opts.T}, {"t_start", t_start},
                      {"control", control_json(bo.control)}, {"wave_h", wave.h()}, {"wave_k0", wave.k0()}};
    // offsets at three levels; the fit is redone from the cached sequences
    const json oj = ctx.cache.get_or(key, [&] {
        const Trajectory tr = solve_lab(profile, eps, opts.h, opts.T, bo);
        json j = json::object();
        for (double lev : {0.5, 0.1, 0.9}) {
            ShiftOptions so = opts.shift;
            so.level = lev;
            so.t_start = t_start;
            const ShiftEstimate s = extract_shift_direct(tr, wave, so);
            j[fmt_double(lev)] = {{"t", s.t_sequence}, {"offsets", s.offsets}, {"speed_correction", s.speed_correction}};
        }
        return j;
    });
    // refit from stored offsets
    auto refit = [&](const json& j, double level) {
        ShiftEstimate s;
        s.route = ShiftRoute::Direct;
        s.level_used = level;
        s.t_sequence = j.at("t").get<std::vector<double>>();
        s.offsets = j.at("offsets").get<std::vector<double>>();
        s.speed_correction = j.at("speed_correction");
        return s;
    };
    std::vector<ShiftEstimate> direct;
    for (double lev : {0.5, 0.1, 0.9}) {
        ShiftEstimate s = refit(oj.at(fmt_double(lev)), lev);
        fit_offsets(s, opts.shift);
        direct.push_back(s);
    }
    double level_spread = 0.0;
    for (const auto& s : direct)
        level_spread = std::max(level_spread, std::fabs(s.s_hat - direct[0].s_hat));

    const RInfinityEstimate r = cached_r_infinity(ell, profile, opts.rinf, ctx.cache);
    const ShiftEstimate self = shift_from_rinf(r);
    const double route_gap = std::fabs(direct[0].s_hat - self.s_hat);

    std::optional<double> cov_err;
    ShiftEstimate self_cov;
    if (opts.covariance_shift != 0.0) {
        const RInfinityEstimate rc = cached_r_infinity(ell, profile.shifted(opts.covariance_shift), opts.rinf, ctx.cache);
        self_cov = shift_from_rinf(rc);
        cov_err = self_cov.s_hat - (self.s_hat - opts.covariance_shift);
    }
    const bool pass = route_gap <= 0.1 && (!cov_err || std::fabs(*cov_err) <= 0.02);

    CsvTable off({"t", "offset_level_0.5", "offset_level_0.1", "offset_level_0.9"});
    for (std::size_t k = 0; k < direct[0].offsets.size(); ++k)
        off.row().cell(direct[0].t_sequence[k]).cell(direct[0].offsets[k]).cell(direct[1].offsets[k]).cell(direct[2].offsets[k]);
    CsvTable samples({"t", "moment", "x_eps_running"});
    for (const auto& m : r.samples)
        if (m.moment > 0.0)
            samples.row().cell(m.t).cell(m.moment).cell(ell - std::log(m.moment));

    ExperimentResult res;
    res.name = "shift_routes";
    res.passed = pass;
    res.summary = {{"experiment", "shift_routes"},
                   {"passed", pass},
                   {"profile", profile.describe()},
                   {"eps", eps},
                   {"ell", ell},
                   {"direct", json::parse(shift_json(direct[0]))},
                   {"direct_level_spread", level_spread},
                   {"direct_level_spread_ok", level_spread <= 2.0 * opts.h},
                   {"selfsimilar", {{"s_hat", self.s_hat}, {"r_inf", self.r_inf}, {"converged", self.converged}}},
                   {"route_gap", route_gap},
                   {"covariance_shift", opts.covariance_shift},
                   {"selfsimilar_shifted", cov_err ? json(self_cov.s_hat) : json(nullptr)},
                   {"covariance_error", cov_err ? json(*cov_err) : json(nullptr)},
                   {"provenance",
                    {{"experiment", "shift_routes"},
                     {"grid", {{"direct_h", opts.h}, {"direct_T", opts.T}, {"rinf_h", opts.rinf.h}, {"rinf_A", opts.rinf.A},
                               {"rinf_T_factor", opts.rinf.T_factor}, {"wave_h", wave.h()}}},
                     {"tolerances", {{"route_gap", 0.1}, {"covariance", 0.02}, {"control", control_json(bo.control)},
                                     {"rinf_control", control_json(opts.rinf.control)}}}}}};
    res.csv.emplace_back("shift_offsets.csv", off.str());
    res.csv.emplace_back("rinf_samples.csv", samples.str());
    return res;
}

ExperimentResult martingale_suite(const std::vector<double>& t_list, std::size_t replicas, std::uint64_t seed,
                                  const ExperimentContext& ctx)
{
    require_replicas(replicas);
    if (t_list.empty())
        throw UsageError("martingale_suite: empty t list");
    std::vector<double> ts(t_list);
    std::sort(ts.begin(), ts.end());
    const std::size_t nt = ts.size();
    std::vector<std::vector<double>> N(nt, std::vector<double>(replicas)), Z = N, W = N;
    parallel_for(replicas, resolve_threads(ctx.threads), [&](std::size_t r) {
        const auto pops = simulate_checkpoints(ts, seed, r);
        for (std::size_t k = 0; k < nt; ++k) {
            ObservableRequest q;
            q.top_k = 0;
            const ExtremalObservables o = observables(pops[k], q);
            N[k][r] = static_cast<double>(o.n_particles);
            Z[k][r] = o.Z_t;
            W[k][r] = o.W_t;
        }
    });
    CsvTable csv({"t", "N_mean", "N_se", "exp_t", "Z_mean", "Z_se", "W_mean", "W_se", "pass_N", "pass_Z", "pass_W"});
    bool all = true;
    json rows = json::array();
    for (std::size_t k = 0; k < nt; ++k) {
        const MCEstimate n = estimate(N[k], seed), z = estimate(Z[k], seed), w = estimate(W[k], seed);
        const double et = std::exp(ts[k]);
        const bool pn = std::fabs(n.mean - et) <= 3.0 * n.std_error;
        const bool pz = std::fabs(z.mean) <= 3.0 * z.std_error;
        const bool pw = std::fabs(w.mean - 1.0) <= 3.0 * w.std_error;
        all = all && pn && pz && pw;
        csv.row().cell(ts[k]).cell(n.mean).cell(n.std_error).cell(et).cell(z.mean).cell(z.std_error).cell(w.mean)
            .cell(w.std_error).cell(pn).cell(pz).cell(pw);
        rows.push_back({{"t", ts[k]}, {"N_mean", n.mean}, {"N_se", n.std_error}, {"Z_mean", z.mean},
                        {"Z_se", z.std_error}, {"W_mean", w.mean}, {"W_se", w.std_error},
                        {"pass_N", pn}, {"pass_Z", pz}, {"pass_W", pw}});
    }
    ExperimentResult res;
    res.name = "martingale";
    res.passed = all;
    res.summary = {{"experiment", "martingale"},
                   {"passed", all},
                   {"rows", rows},
                   {"provenance",
                    {{"experiment", "martingale"},
                     {"seed", seed},
                     {"replicas", replicas},
                     {"grid", {{"t", ts}}},
                     {"tolerances", {{"band_se", 3.0}}}}}};
    res.csv.emplace_back("martingale.csv", csv.str());
    return res;
}

ExperimentResult extremal_rescaled(double t, const std::vector<double>& n_list, std::size_t replicas,
                                   std::uint64_t seed, const ExpansionConstants& consts, const ExperimentContext& ctx,
                                   const std::vector<double>& lambdas)
{
    require_replicas(replicas);
    if (n_list.size() < 2)
        throw UsageError("extremal_rescaled: need at least two values of n");
    std::vector<double> ns(n_list);
    std::sort(ns.begin(), ns.end());
    const InitialProfile half_line = InitialProfile::step(1.0, 0.0);
    const double mu = mu_of(half_line), nu = nu_of(half_line);
    const std::size_t nn = ns.size();
    std::vector<double> Zt(replicas);
    std::vector<std::vector<double>> Y(nn, std::vector<double>(replicas)), V = Y;
    parallel_for(replicas, resolve_threads(ctx.threads), [&](std::size_t r) {
        const BBMPopulation p = simulate(t, seed, r);
        for (std::size_t k = 0; k < nn; ++k) {
            ObservableRequest q;
            q.phi0 = &half_line;
            q.n = ns[k];
            q.top_k = 0;
            const ExtremalObservables o = observables(p, q);
            Zt[r] = o.Z_t;
            Y[k][r] = o.Y_n;
            V[k][r] = o.V_n;
        }
    });
    std::size_t positive = 0;
    double zsum = 0.0;
    for (double z : Zt)
        if (z > 0.0) {
            ++positive;
            zsum += z;
        }
    if (positive == 0)
        throw NumericError("extremal_rescaled: no replica with Z_t > 0");
    CsvTable csv({"n", "ratio", "mu", "abs_gap"});
    CsvTable lap({"n", "lambda", "empirical", "target"});
    std::vector<double> gaps, ratios;
    for (std::size_t k = 0; k < nn; ++k) {
        double ysum = 0.0;
        for (std::size_t r = 0; r < replicas; ++r)
            if (Zt[r] > 0.0)
                ysum += Y[k][r];
        const double ratio = ysum / zsum;
        ratios.push_back(ratio);
        gaps.push_back(std::fabs(ratio - mu));
        csv.row().cell(ns[k]).cell(ratio).cell(mu).cell(gaps.back());
        for (double lam : lambdas) {
            double emp = 0.0, tgt = 0.0;
            for (std::size_t r = 0; r < replicas; ++r)
                if (Zt[r] > 0.0) {
                    emp += std::exp(-lam * V[k][r]);
                    tgt += laplace_fluctuation_target(lam, mu, nu, Zt[r], consts.m1);
                }
            lap.row().cell(ns[k]).cell(lam).cell(emp / positive).cell(tgt / positive);
        }
    }
    const bool trend = strictly_decreasing(gaps);
    ExperimentResult res;
    res.name = "extremal";
    res.passed = trend;
    res.summary = {{"experiment", "extremal"},
                   {"passed", trend},
                   {"t", t},
                   {"n", ns},
                   {"ratio", ratios},
                   {"mu", mu},
                   {"gap_decreasing_in_n", trend},
                   {"fraction_Z_positive", static_cast<double>(positive) / replicas},
                   {"note", "finite-t proxy with Z_t in place of Z; qualitative trend only"},
                   {"provenance",
                    {{"experiment", "extremal"},
                     {"seed", seed},
                     {"replicas", replicas},
                     {"grid", {{"t", t}, {"n", ns}, {"lambda", lambdas}}},
                     {"tolerances", json::object()}}}};
    res.csv.emplace_back("extremal.csv", csv.str());
    res.csv.emplace_back("laplace_vn.csv", lap.str());
    return res;
}

} // namespace kppbbm
