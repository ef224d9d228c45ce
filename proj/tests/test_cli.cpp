#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kppbbm/cli.hpp"
#include "kppbbm/io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("kppbbm_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct Run {
    int code;
    std::string out;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "kppbbm");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream cap;
    auto* old = std::cout.rdbuf(cap.rdbuf());
    const int code = kppbbm::run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return {code, cap.str()};
}

json summary_of(const TempDir& d, const std::string& sub)
{
    return json::parse(kppbbm::read_file(d / (sub + "/summary.json")));
}

} // namespace

TEST_CASE("constants")
{
    TempDir d;
    const Run r = run({"constants", "--phi", "box:-1:0", "--tol", "1e-8", "--out", d / "c"});
    REQUIRE(r.code == 0);
    const json s = json::parse(r.out);
    const double cbar = (1.0 - std::exp(-1.0)) / std::sqrt(4.0 * M_PI);
    CHECK(s["cbar"].get<double>() == doctest::Approx(cbar).epsilon(1e-8));
    CHECK(std::fabs(s["cbar"].get<double>() - 0.178320) <= 5e-6);
    CHECK(s["g_inf"].get<double>() == doctest::Approx(0.5772156649015329).epsilon(1e-8));
    for (const char* f : {"manifest.json", "summary.json", "constants.csv"})
        CHECK(fs::exists(d / (std::string("c/") + f)));
    CHECK(summary_of(d, "c") == s);
}

TEST_CASE("wave")
{
    TempDir d;
    const Run r = run({"wave", "--h", "0.005", "--xmin", "-40", "--xmax", "40", "--out", d / "w"});
    REQUIRE(r.code == 0);
    const json s = json::parse(r.out);
    CHECK(s["k0"].get<double>() == doctest::Approx(-1.95242).epsilon(1e-4));
    CHECK(std::fabs(s["identities"]["residual_mass"].get<double>()) <= 1e-4);
    CHECK(std::fabs(s["identities"]["residual_first_moment"].get<double>()) <= 1e-3);
    CHECK(s["passed"] == true);
    CHECK(fs::exists(d / "w/wave.csv"));
}

TEST_CASE("usage errors exit with 2")
{
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"constants", "--bogus"}).code == 2);
    CHECK(run({"constants", "--phi", "nonsense"}).code == 2);
    CHECK(run({"constants", "--tol", "abc"}).code == 2);
    CHECK(run({"mckean", "--t", "1"}).code == 2);
    CHECK(run({"constants", "--config", "/nonexistent/cfg.json"}).code == 2);
    CHECK(run({"report"}).code == 2);
    CHECK(run({"constants", "--help"}).code == 0);
}

TEST_CASE("config file with flag override, manifest rerun")
{
    TempDir d;
    kppbbm::atomic_write(d / "cfg.json", R"({"phi": "box:-2:0", "tol": 1e-9})");
    const Run a = run({"constants", "--config", d / "cfg.json", "--out", d / "a"});
    REQUIRE(a.code == 0);
    CHECK(json::parse(a.out)["profile"] == "box:-2:0:1");
    const Run b = run({"constants", "--config", d / "cfg.json", "--phi", "box:-1:0", "--out", d / "b"});
    REQUIRE(b.code == 0);
    CHECK(json::parse(b.out)["profile"] == "box:-1:0:1");

    const json man = json::parse(kppbbm::read_file(d / "b/manifest.json"));
    CHECK(man["config"]["phi"] == "box:-1:0");
    CHECK(man["config"]["tol"].get<double>() == 1e-9);
    CHECK(man["input_hashes"].contains("config"));

    // the manifest is itself a config
    const Run c = run({"constants", "--config", d / "b/manifest.json", "--out", d / "c"});
    REQUIRE(c.code == 0);
    CHECK(kppbbm::read_file(d / "c/constants.csv") == kppbbm::read_file(d / "b/constants.csv"));
    CHECK(run({"wave", "--config", d / "b/manifest.json"}).code == 2);

    kppbbm::atomic_write(d / "bad.json", "{not json");
    CHECK(run({"constants", "--config", d / "bad.json"}).code == 2);
}

TEST_CASE("bbm aggregate is reproducible across thread counts")
{
    TempDir d;
    const Run a = run({"bbm", "--t", "3", "--replicas", "2000", "--threads", "1", "--out", d / "a"});
    const Run b = run({"bbm", "--t", "3", "--replicas", "2000", "--threads", "3", "--out", d / "b"});
    CHECK(a.code == b.code);
    for (const auto& e : fs::directory_iterator(d.path / "a"))
        if (e.path().extension() == ".csv")
            CHECK(kppbbm::read_file(e.path().string()) == kppbbm::read_file(d / ("b/" + e.path().filename().string())));

    ::setenv("KPPBBM_THREADS", "2", 1);
    const Run c = run({"bbm", "--t", "3", "--replicas", "2000", "--out", d / "c"});
    ::unsetenv("KPPBBM_THREADS");
    CHECK(c.out == a.out);
}

TEST_CASE("expand and report")
{
    TempDir d;
    REQUIRE(run({"constants", "--out", d / "runs/one"}).code == 0);
    const Run e = run({"expand", "--out", d / "runs/two"});
    CHECK(e.code == 0);
    CHECK(fs::exists(d / "runs/two/expand_eps.csv"));

    const Run r = run({"report", "--dir", d / "runs", "--out", d / "rep"});
    CHECK(r.code == 0);
    const json s = json::parse(r.out);
    CHECK(s["summaries"].size() == 2);
    CHECK(s["passed"] == true);

    // a summary without provenance fails the audit
    kppbbm::atomic_write(d / "runs/three/summary.json", R"({"experiment": "x", "passed": true})");
    CHECK(run({"report", "--dir", d / "runs"}).code == 1);
}
