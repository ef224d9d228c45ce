#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/errors.hpp"
#include "kppbbm/experiments.hpp"
#include "kppbbm/io.hpp"
#include "kppbbm/pde.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace kppbbm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("kppbbm_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("sha256 and atomic writes")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    TempDir d;
    const std::string p = (d.path / "a.txt").string();
    atomic_write(p, "one");
    atomic_write(p, "two");
    CHECK(read_file(p) == "two");
    CHECK(std::distance(fs::directory_iterator(d.path), fs::directory_iterator{}) == 1);
    atomic_write((d.path / "sub" / "x.txt").string(), "x");
    CHECK(read_file((d.path / "sub" / "x.txt").string()) == "x");
    // a regular file cannot be a parent directory
    CHECK_THROWS(atomic_write(p + "/x.txt", "x"));
    CHECK_THROWS(read_file((d.path / "nope").string()));
}

TEST_CASE("csv formatting round-trips doubles")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23})
        CHECK(std::stod(fmt_double(v)) == v);
    CsvTable t({"a", "b"});
    t.row().cell(1.5).cell(std::string("x"));
    t.row().cell(2LL).cell(true);
    CHECK(t.rows() == 2);
    CHECK(t.str() == "a,b\n1.5,x\n2,1\n");
}

TEST_CASE("disk cache")
{
    TempDir d;
    DiskCache c(d.str());
    const json key = {{"kind", "probe"}, {"h", 0.01}};
    CHECK_FALSE(c.get(key));
    int calls = 0;
    auto compute = [&] {
        ++calls;
        return json{{"value", 3.25}};
    };
    CHECK(c.get_or(key, compute)["value"] == 3.25);
    CHECK(c.get_or(key, compute)["value"] == 3.25);
    CHECK(calls == 1);
    CHECK_FALSE(c.get({{"kind", "probe"}, {"h", 0.02}}));

    DiskCache off;
    CHECK_FALSE(off.enabled());
    off.get_or(key, compute);
    off.get_or(key, compute);
    CHECK(calls == 3);
}

TEST_CASE("provenance audit")
{
    json ok = {{"passed", true},
               {"provenance", {{"experiment", "x"}, {"grid", json::object()}, {"tolerances", json::object()}}}};
    CHECK(audit_provenance(ok).empty());
    json mc = ok;
    mc["provenance"]["replicas"] = 10;
    CHECK(audit_provenance(mc) == std::vector<std::string>{"provenance.seed"});
    json bad = ok;
    bad["provenance"].erase("grid");
    bad.erase("passed");
    const auto m = audit_provenance(bad);
    CHECK(std::find(m.begin(), m.end(), "provenance.grid") != m.end());
    CHECK(std::find(m.begin(), m.end(), "passed") != m.end());
    CHECK_FALSE(audit_provenance(json::object()).empty());
}

TEST_CASE("aggregation does not depend on replica order")
{
    std::vector<double> v(5000);
    std::mt19937_64 g(5);
    std::exponential_distribution<double> e(1.0);
    for (auto& x : v)
        x = e(g);
    const MCEstimate a = estimate(v, 1);
    std::shuffle(v.begin(), v.end(), g);
    const MCEstimate b = estimate(v, 1);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-13));
    CHECK(a.std_error == doctest::Approx(b.std_error).epsilon(1e-10));
    CHECK(a.replicas == 5000);
    CHECK(a.std_error >= 0.0);
}

TEST_CASE("McKean check at small scale")
{
    TempDir d;
    ExperimentContext ctx;
    ctx.h = 0.02;
    ctx.cache = DiskCache(d.str());
    const double t = 2.0, m = bramson_m(t);
    std::vector<double> xs;
    for (double x = -30.0; x <= m + 6.0; x += 1.0)
        xs.push_back(x);
    const auto r = mckean_check(t, xs, 4000, 42, ctx);
    CHECK(r.passed);
    CHECK(r.summary["monotone"] == true);
    CHECK(audit_provenance(r.summary).empty());
    // far left: every maximum is above x and u = 1
    const std::string& csv = r.csv.at(0).second;
    const std::string first = csv.substr(csv.find('\n') + 1, csv.find('\n', csv.find('\n') + 1) - csv.find('\n') - 1);
    CHECK(first.rfind("-30,1,0,", 0) == 0);
    CHECK(std::stod(first.substr(8)) == doctest::Approx(1.0).epsilon(1e-12));

    const auto again = mckean_check(t, xs, 4000, 42, ctx);
    CHECK(again.csv == r.csv);
    CHECK_THROWS_AS(mckean_check(1.0, xs, 10, 42, ctx), UsageError);
    CHECK_THROWS_AS(mckean_check(2.0, xs, 0, 42, ctx), UsageError);
}

TEST_CASE("duality check at small scale")
{
    ExperimentContext ctx;
    ctx.h = 0.02;
    DualityOptions o;
    o.trend_times = {2.0, 3.0};
    o.limit_T = 0.0;
    const auto z = duality_check(InitialProfile::zero(), 4.0, 100, 42, ctx, nullptr, o);
    CHECK(z.summary["empirical"] == 1.0);
    CHECK(z.summary["pde_value"] == 1.0);
    CHECK(z.summary["wave_limit"] == 1.0);
    CHECK(z.passed);

    const auto b = duality_check(InitialProfile::box(-1.0, 0.0), 4.0, 5000, 42, ctx, nullptr, o);
    CHECK(b.passed);
    CHECK(audit_provenance(b.summary).empty());
    CHECK(b.summary["wave_limit"].is_null());
}

TEST_CASE("martingale suite, persistence and reruns")
{
    ExperimentContext ctx;
    ctx.threads = 1;
    const auto r = martingale_suite({1.0, 3.0, 2.0}, 100000, 42, ctx);
    CHECK(r.passed);
    CHECK(audit_provenance(r.summary).empty());
    CHECK(r.summary["rows"].size() == 3);
    CHECK(r.summary["rows"][0]["t"] == 1.0);

    ctx.threads = 3;
    const auto r3 = martingale_suite({1.0, 2.0, 3.0}, 100000, 42, ctx);
    CHECK(r3.csv == r.csv);

    TempDir d;
    RunManifest m;
    m.command = "bbm";
    m.config = {{"mode", "martingale"}};
    m.seed = 42;
    m.input_hashes.emplace_back("config", sha256_hex("{}"));
    const auto paths = persist(m, r, d.str());
    CHECK(paths.size() == 3);
    const json man = json::parse(read_file((d.path / "manifest.json").string()));
    CHECK(man["schema_version"] == kSchemaVersion);
    CHECK(man["seed"] == 42);
    CHECK(man["command"] == "bbm");
    for (const auto& f : {"martingale.csv", "summary.json"}) {
        REQUIRE(man["output_hashes"].contains(f));
        CHECK(man["output_hashes"][f] == sha256_hex(read_file((d.path / f).string())));
    }
    const json summary = json::parse(read_file((d.path / "summary.json").string()));
    CHECK(summary["passed"] == true);
    CHECK_THROWS(persist(m, r, (d.path / "a" / "b").string() + std::string(1, '\0')));

    CHECK_THROWS_AS(martingale_suite({}, 10, 42, ctx), UsageError);
}
