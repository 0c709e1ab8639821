#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "orbitlab/harness/run.hpp"

using namespace orbitlab;
using namespace orbitlab::harness;
namespace fs = std::filesystem;

namespace {

json eagleson_doc() {
    return json::parse(R"({
        "experiment": "eagleson", "seed": 5,
        "params": {"f": "coin", "phi": "density-0", "g": "tent", "n": [64, 256], "samples": 4000}
    })");
}

bool mentions(const std::vector<std::string>& diags, const std::string& text) {
    for (const auto& d : diags)
        if (d.find(text) != std::string::npos) return true;
    return false;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("orbitlab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args) {
    const int status = std::system((std::string(ORBITLAB_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ShippedConfigsAreValid) {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(ORBITLAB_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        const auto diags = validate(read_json_file(entry.path().string()));
        EXPECT_TRUE(diags.empty()) << entry.path() << ": " << (diags.empty() ? "" : diags.front());
        ++count;
    }
    EXPECT_GE(count, 8u);
}

TEST(Config, UnknownTestFunctionIsNamed) {
    auto doc = eagleson_doc();
    doc["params"]["g"] = "smooth-bump";
    const auto diags = validate(doc);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_NE(diags[0].find("params.g"), std::string::npos);
    EXPECT_NE(diags[0].find("smooth-bump"), std::string::npos);
}

TEST(Config, AllErrorsReported) {
    const auto doc = json::parse(R"({
        "experiment": "two-sided", "arithmetic": "interval", "seed": -1, "colour": 3,
        "params": {"f": "coin", "g": "tent", "n": [0], "phi1": "density-7"}
    })");
    const auto diags = validate(doc);
    EXPECT_TRUE(mentions(diags, "arithmetic"));
    EXPECT_TRUE(mentions(diags, "seed"));
    EXPECT_TRUE(mentions(diags, "colour"));
    EXPECT_TRUE(mentions(diags, "params.n[0]"));
    EXPECT_TRUE(mentions(diags, "density-7"));
    EXPECT_TRUE(mentions(diags, "params.phi2"));
    EXPECT_EQ(diags.size(), 6u);
    try {
        parse_config(doc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("density-7"), std::string::npos);
    }
}

TEST(Config, UnknownExperiment) {
    EXPECT_TRUE(mentions(validate(json::parse(R"({"experiment": "mix"})")), "unknown kind 'mix'"));
    EXPECT_TRUE(mentions(validate(json::parse(R"({})")), "experiment: required"));
    EXPECT_TRUE(mentions(validate(json::parse("[1]")), "JSON object"));
}

TEST(Config, HashIgnoresKeyOrder) {
    const auto a = json::parse(R"({"experiment": "l2bound", "params": {"phi1": "one", "phi2": "sign-1", "epsilon": 0.1}})");
    const auto b = json::parse(R"({"params": {"epsilon": 0.1, "phi2": "sign-1", "phi1": "one"}, "experiment": "l2bound"})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    auto c = a;
    c["params"]["epsilon"] = 0.2;
    EXPECT_NE(config_hash(a), config_hash(c));
    EXPECT_EQ(hex64(config_hash(a)).size(), 16u);
}

TEST(Catalogs, Listing) {
    const auto cat = list_catalogs();
    EXPECT_GE(cat["test_functions"]["entries"].size(), 3u);
    EXPECT_EQ(cat["test_functions"]["version"], test_function_catalog_version);
    EXPECT_GE(cat["observables"].size(), 3u);
    EXPECT_EQ(cat["systems"].size(), system_presets().size());
}

TEST(Catalogs, Observables) {
    const auto f = make_observable<Rational>(json("density-01"), 2);
    EXPECT_EQ(f.depth(), 2u);
    EXPECT_EQ(integrate(make_system<Rational>(json("fair-coin")), f), Rational(1));
    EXPECT_THROW(make_observable<Rational>(json("coin"), 3), Error);
    const auto g = make_observable<Rational>(json::parse(R"({"depth": 1, "values": ["1/3", 0, 2]})"), 3);
    EXPECT_EQ(g[0], Rational(1, 3));
}

TEST(Run, CsvIsByteIdentical) {
    const auto dir = scratch("csv");
    auto doc = eagleson_doc();
    doc["output"] = {{"csv", (dir / "a.csv").string()}, {"record", (dir / "a.json").string()}};
    const auto first = run(parse_config(doc));
    doc["output"] = {{"csv", (dir / "b.csv").string()}};
    doc["workers"] = 2;
    run(parse_config(doc));
    const auto a = slurp(dir / "a.csv");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    EXPECT_EQ(a.rfind("# orbitlab csv v1\nexperiment,n,estimate,stderr,ks,m_n_mass,seed\n", 0), 0u);
    EXPECT_EQ(first.rows.size(), 2u);
    const auto record = json::parse(slurp(dir / "a.json"));
    EXPECT_EQ(record["config_hash"], first.config_hash);
    EXPECT_EQ(record["seed"], 5);
    EXPECT_TRUE(record.contains("version"));
    EXPECT_TRUE(record.contains("wall_time_s"));
}

TEST(Run, NonmixingDemo) {
    const auto record = run(parse_config(json::parse(R"({"experiment": "nonmixing-demo", "params": {"n_max": 6}})")));
    ASSERT_EQ(record.rows.size(), 7u);
    for (std::size_t n = 0; n <= 6; ++n) EXPECT_EQ(record.rows[n].m_n_mass, n % 2 ? "2" : "0") << n;
    EXPECT_EQ(record.summary["mixing_hypothesis"], "hypothesis violated");
    EXPECT_EQ(record.exit_code(), 0);
}

TEST(Run, L2BoundWitness) {
    const auto record = run(parse_config(
        json::parse(R"({"experiment": "l2bound", "params": {"phi1": "one", "phi2": "sign-1", "epsilon": "1/20"}})")));
    EXPECT_EQ(record.exit_code(), 0);
    EXPECT_FALSE(record.rows.empty());
}

TEST(Run, FailedThresholdExitsTwo) {
    auto doc = eagleson_doc();
    doc["thresholds"] = {{"ks", 1e-12}};
    const auto record = run(parse_config(doc));
    EXPECT_FALSE(record.passed());
    EXPECT_EQ(record.exit_code(), 2);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    auto write = [&](const std::string& name, const json& doc) {
        std::ofstream(dir / name) << doc.dump();
        return (dir / name).string();
    };
    auto pass = eagleson_doc();
    pass["thresholds"] = {{"gap", 0.5}};
    auto fail = eagleson_doc();
    fail["thresholds"] = {{"ks", 1e-12}};
    auto bad = eagleson_doc();
    bad["params"]["g"] = "smooth-bump";
    EXPECT_EQ(cli("run --config " + write("pass.json", pass)), 0);
    EXPECT_EQ(cli("run --config " + write("fail.json", fail)), 2);
    EXPECT_EQ(cli("run --config " + write("bad.json", bad)), 1);
    EXPECT_EQ(cli("validate --config " + (dir / "bad.json").string()), 1);
    EXPECT_EQ(cli("validate --config " + (dir / "pass.json").string()), 0);
    EXPECT_EQ(cli("run --config " + (dir / "missing.json").string()), 1);
    EXPECT_EQ(cli("catalogs"), 0);
}
