#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbitlab/harness/catalogs.hpp"

namespace orbitlab::harness {

using nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"couple",    "eagleson",   "two-sided", "multi-point",
                                                "l2bound",   "invariance", "asip",      "nonmixing-demo"};
    return kinds;
}

/// Validated experiment description. `params` and `thresholds` stay as JSON;
/// the runner reads them per experiment kind.
struct ExperimentConfig {
    json document;
    std::string kind;
    std::string name;
    std::string arithmetic = "exact";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    json system = "fair-coin";
    json params = json::object();
    json thresholds = json::object();
    std::string csv_path;
    std::string record_path;
    std::string plan_path;
};

/// FNV-1a over the canonical dump (object keys sorted), so key order does not matter.
inline std::uint64_t config_hash(const json& document) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : document.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

namespace detail {

class Checker {
public:
    explicit Checker(std::vector<std::string>& out) : out_(out) {}

    void error(const std::string& msg) { out_.push_back(msg); }

    bool scalar(const json& j, const std::string& where, bool positive, bool allow_zero = false) {
        try {
            Rational v;
            if (j.is_string()) v = ScalarTraits<Rational>::parse(j.get<std::string>());
            else if (j.is_number_integer()) v = Rational(j.get<long long>());
            else if (j.is_number()) v = ScalarTraits<Rational>::parse(j.dump());
            else {
                error(where + ": expected a number");
                return false;
            }
            if (positive && (v < 0 || (v == 0 && !allow_zero))) {
                error(where + ": must be " + (allow_zero ? "nonnegative" : "positive"));
                return false;
            }
            return true;
        } catch (const std::exception&) {
            error(where + ": not a valid number: " + j.dump());
            return false;
        }
    }

    bool integer(const json& j, const std::string& where, std::int64_t min) {
        if (!j.is_number_integer() || j.get<std::int64_t>() < min) {
            error(where + ": expected an integer >= " + std::to_string(min));
            return false;
        }
        return true;
    }

    void observable(const json& j, const std::string& where) {
        if (j.is_string()) {
            if (!find_observable(j.get<std::string>()))
                error(where + ": unknown observable '" + j.get<std::string>() + "'");
            return;
        }
        if (!j.is_object() || !j.contains("values") || !j.at("values").is_array()) {
            error(where + ": expected a catalog name or {\"depth\": d, \"values\": [...]}");
            return;
        }
        for (std::size_t i = 0; i < j.at("values").size(); ++i)
            scalar(j.at("values")[i], where + ".values[" + std::to_string(i) + "]", false);
    }

    void test_fn(const json& j, const std::string& where) {
        if (!j.is_string()) {
            error(where + ": expected a test function id");
            return;
        }
        try {
            test_function(j.get<std::string>());
        } catch (const Error& e) {
            error(where + ": " + e.what());
        }
    }

    void schedule(const json& j, const std::string& where) {
        if (!j.is_object()) {
            error(where + ": expected {\"coefficient\": c, \"exponent\": a}");
            return;
        }
        if (j.contains("coefficient")) scalar(j.at("coefficient"), where + ".coefficient", true);
        if (j.contains("exponent")) scalar(j.at("exponent"), where + ".exponent", true);
    }

    void n_list(const json& j, const std::string& where) {
        if (!j.is_array() || j.empty()) {
            error(where + ": expected a nonempty list of positive integers");
            return;
        }
        for (std::size_t i = 0; i < j.size(); ++i) integer(j[i], where + "[" + std::to_string(i) + "]", 1);
    }

private:
    std::vector<std::string>& out_;
};

}  // namespace detail

/// All schema violations of a config document; empty when valid.
inline std::vector<std::string> validate(const json& doc) {
    std::vector<std::string> diags;
    detail::Checker check(diags);
    if (!doc.is_object()) {
        diags.push_back("config: expected a JSON object");
        return diags;
    }
    static const std::set<std::string> top_keys{"experiment", "name",   "system",     "arithmetic", "seed",
                                                "workers",    "params", "thresholds", "output"};
    for (const auto& [key, value] : doc.items())
        if (!top_keys.count(key)) check.error("config: unknown key '" + key + "'");

    std::string kind;
    if (!doc.contains("experiment") || !doc.at("experiment").is_string()) {
        check.error("experiment: required, one of couple|eagleson|two-sided|multi-point|l2bound|invariance|asip|nonmixing-demo");
    } else {
        kind = doc.at("experiment").get<std::string>();
        const auto& kinds = experiment_kinds();
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
            check.error("experiment: unknown kind '" + kind + "'");
            kind.clear();
        }
    }
    if (doc.contains("arithmetic")) {
        const auto& a = doc.at("arithmetic");
        if (!a.is_string() || (a != "exact" && a != "float")) check.error("arithmetic: expected \"exact\" or \"float\"");
    }
    if (doc.contains("seed")) check.integer(doc.at("seed"), "seed", 0);
    if (doc.contains("workers")) check.integer(doc.at("workers"), "workers", 1);
    if (doc.contains("system")) {
        const auto& s = doc.at("system");
        if (s.is_string()) {
            if (!is_system_preset(s.get<std::string>()))
                check.error("system: unknown preset '" + s.get<std::string>() + "'");
        } else if (s.is_object() && (s.contains("weights") || s.contains("transition"))) {
            try {
                make_system<Rational>(s);
            } catch (const std::exception& e) {
                check.error(std::string("system: ") + e.what());
            }
        } else {
            check.error("system: expected a preset name or {\"weights\": [...]} / {\"transition\", \"stationary\"}");
        }
    }
    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        if (!o.is_object()) check.error("output: expected an object");
        else
            for (const auto& [key, value] : o.items()) {
                if (key != "csv" && key != "record" && key != "plan") check.error("output: unknown key '" + key + "'");
                else if (!value.is_string()) check.error("output." + key + ": expected a path string");
            }
    }
    if (doc.contains("thresholds")) {
        const auto& t = doc.at("thresholds");
        if (!t.is_object()) check.error("thresholds: expected an object");
        else
            for (const auto& [key, value] : t.items()) check.scalar(value, "thresholds." + key, true);
    }

    const json params = doc.value("params", json::object());
    if (!params.is_object()) {
        check.error("params: expected an object");
        return diags;
    }
    auto require = [&](const std::string& key) {
        if (params.contains(key)) return true;
        check.error("params." + key + ": required for experiment '" + kind + "'");
        return false;
    };
    auto optional_int = [&](const std::string& key, std::int64_t min) {
        if (params.contains(key)) check.integer(params.at(key), "params." + key, min);
    };
    auto coupling_params = [&] {
        if (require("f1")) check.observable(params.at("f1"), "params.f1");
        if (require("f2")) check.observable(params.at("f2"), "params.f2");
        if (require("epsilon")) check.scalar(params.at("epsilon"), "params.epsilon", true);
        optional_int("max_rounds", 1);
        optional_int("max_round_atoms", 1);
        if (params.contains("mass_floor")) check.scalar(params.at("mass_floor"), "params.mass_floor", true, true);
        if (params.contains("gluing") && params.at("gluing") != "independent" && params.at("gluing") != "monotone")
            check.error("params.gluing: expected \"independent\" or \"monotone\"");
    };
    auto mc_params = [&] {
        if (require("f")) check.observable(params.at("f"), "params.f");
        if (require("g")) check.test_fn(params.at("g"), "params.g");
        if (require("n")) check.n_list(params.at("n"), "params.n");
        optional_int("samples", 2);
        if (params.contains("normalization")) check.schedule(params.at("normalization"), "params.normalization");
    };

    if (kind == "couple") {
        coupling_params();
        optional_int("sample_pairs", 0);
    } else if (kind == "eagleson") {
        mc_params();
        if (require("phi")) check.observable(params.at("phi"), "params.phi");
    } else if (kind == "two-sided" || kind == "invariance") {
        mc_params();
        if (require("phi1")) check.observable(params.at("phi1"), "params.phi1");
        if (require("phi2")) check.observable(params.at("phi2"), "params.phi2");
    } else if (kind == "multi-point") {
        mc_params();
        const bool has_phis = require("phis");
        const bool has_times = require("time_fractions");
        if (has_phis) {
            const auto& phis = params.at("phis");
            if (!phis.is_array() || phis.size() < 2) check.error("params.phis: expected a list of at least 2 densities");
            else
                for (std::size_t i = 0; i < phis.size(); ++i)
                    check.observable(phis[i], "params.phis[" + std::to_string(i) + "]");
        }
        if (has_times) {
            const auto& times = params.at("time_fractions");
            if (!times.is_array()) check.error("params.time_fractions: expected a list");
            else {
                for (std::size_t i = 0; i < times.size(); ++i)
                    check.scalar(times[i], "params.time_fractions[" + std::to_string(i) + "]", true, true);
                if (has_phis && params.at("phis").is_array() && times.size() != params.at("phis").size())
                    check.error("params.time_fractions: need one time per density");
            }
        }
    } else if (kind == "l2bound") {
        if (require("phi1")) check.observable(params.at("phi1"), "params.phi1");
        if (require("phi2")) check.observable(params.at("phi2"), "params.phi2");
        if (require("epsilon")) check.scalar(params.at("epsilon"), "params.epsilon", true);
    } else if (kind == "asip") {
        coupling_params();
        if (require("f")) check.observable(params.at("f"), "params.f");
        if (params.contains("rate")) check.schedule(params.at("rate"), "params.rate");
        optional_int("n_max", 1);
        optional_int("pairs", 1);
        optional_int("window_start", 1);
    } else if (kind == "nonmixing-demo") {
        optional_int("n_max", 1);
        if (params.contains("phi1")) check.observable(params.at("phi1"), "params.phi1");
        if (params.contains("phi2")) check.observable(params.at("phi2"), "params.phi2");
    }
    return diags;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("config '" + path + "': " + e.what());
    }
}

/// Validates and unpacks; throws with every diagnostic on failure.
inline ExperimentConfig parse_config(const json& doc) {
    const auto diags = validate(doc);
    if (!diags.empty()) {
        std::string msg = "invalid config:";
        for (const auto& d : diags) msg += "\n  " + d;
        throw Error(msg);
    }
    ExperimentConfig c;
    c.document = doc;
    c.kind = doc.at("experiment").get<std::string>();
    c.name = doc.value("name", c.kind);
    c.arithmetic = doc.value("arithmetic", "exact");
    c.seed = doc.value("seed", std::uint64_t{0});
    c.workers = doc.value("workers", std::size_t{1});
    c.system = doc.value("system", json(c.kind == "nonmixing-demo" ? "period-two" : "fair-coin"));
    c.params = doc.value("params", json::object());
    c.thresholds = doc.value("thresholds", json::object());
    const json output = doc.value("output", json::object());
    c.csv_path = output.value("csv", "");
    c.record_path = output.value("record", "");
    c.plan_path = output.value("plan", "");
    return c;
}

}  // namespace orbitlab::harness
