#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "orbitlab/json_io.hpp"
#include "orbitlab/limit/test_functions.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab::harness {

struct SystemPreset {
    std::string_view name;
    std::string_view description;
};

inline const std::vector<SystemPreset>& system_presets() {
    static const std::vector<SystemPreset> presets{
        {"fair-coin", "Bernoulli(1/2, 1/2)"},
        {"biased-coin", "Bernoulli(1/3, 2/3)"},
        {"uniform-3", "Bernoulli(1/3, 1/3, 1/3)"},
        {"period-two", "Markov chain P = [[0,1],[1,0]], pi = (1/2, 1/2)"},
    };
    return presets;
}

/// Named binary cylinder functions, values given as exact strings.
struct ObservableEntry {
    std::string_view name;
    std::string_view description;
    std::size_t depth;
    std::vector<std::string_view> values;
};

inline const std::vector<ObservableEntry>& observable_catalog() {
    static const std::vector<ObservableEntry> catalog{
        {"coin", "f = 1/2 on [0], -1/2 on [1]", 1, {"1/2", "-1/2"}},
        {"density-0", "2 * 1_[0]", 1, {"2", "0"}},
        {"density-1", "2 * 1_[1]", 1, {"0", "2"}},
        {"sign-1", "2 * 1_[1] - 1 (zero mean on the fair coin)", 1, {"-1", "1"}},
        {"one", "constant 1", 0, {"1"}},
        {"density-01", "4 * 1_[01]", 2, {"0", "4", "0", "0"}},
    };
    return catalog;
}

inline const ObservableEntry* find_observable(std::string_view name) {
    for (const auto& o : observable_catalog())
        if (o.name == name) return &o;
    return nullptr;
}

inline bool is_system_preset(std::string_view name) {
    for (const auto& p : system_presets())
        if (p.name == name) return true;
    return false;
}

template <class S>
ShiftSystem<S> make_system(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        const S third = S(1) / S(3);
        const S half = S(1) / S(2);
        if (name == "fair-coin") return ShiftSystem<S>::bernoulli({half, half});
        if (name == "biased-coin") return ShiftSystem<S>::bernoulli({third, S(2) / S(3)});
        if (name == "uniform-3") return ShiftSystem<S>::bernoulli({third, third, third});
        if (name == "period-two") return ShiftSystem<S>::markov({{S(0), S(1)}, {S(1), S(0)}}, {half, half});
        throw Error("unknown system preset '" + name + "'");
    }
    std::vector<S> weights;
    if (j.contains("transition")) {
        std::vector<std::vector<S>> p;
        for (const auto& row : j.at("transition")) {
            p.emplace_back();
            for (const auto& v : row) p.back().push_back(scalar_from_json<S>(v));
        }
        for (const auto& v : j.at("stationary")) weights.push_back(scalar_from_json<S>(v));
        return ShiftSystem<S>::markov(std::move(p), std::move(weights));
    }
    for (const auto& v : j.at("weights")) weights.push_back(scalar_from_json<S>(v));
    return ShiftSystem<S>::bernoulli(std::move(weights));
}

/// A catalog name or an inline {depth, values} table.
template <class S>
CylinderFunction<S> make_observable(const nlohmann::json& j, std::size_t alphabet) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        const auto* entry = find_observable(name);
        if (!entry) throw Error("unknown observable '" + name + "'");
        if (alphabet != 2) throw Error("observable '" + name + "' is defined on a binary alphabet");
        std::vector<S> values;
        for (auto v : entry->values) values.push_back(ScalarTraits<S>::parse(std::string(v)));
        return {2, entry->depth, std::move(values)};
    }
    return cylinder_function_from_json<S>(j, alphabet);
}

inline nlohmann::json list_catalogs() {
    nlohmann::json out;
    out["test_functions"]["version"] = test_function_catalog_version;
    for (const auto& g : test_function_catalog())
        out["test_functions"]["entries"].push_back(
            {{"id", g.name}, {"formula", g.formula}, {"sup_norm", g.sup_norm}, {"lipschitz", g.lipschitz},
             {"normal_expectation", g.normal_expectation()}});
    for (const auto& o : observable_catalog()) {
        nlohmann::json values = nlohmann::json::array();
        for (auto v : o.values) values.push_back(std::string(v));
        out["observables"].push_back(
            {{"id", o.name}, {"description", o.description}, {"depth", o.depth}, {"values", values}});
    }
    for (const auto& p : system_presets())
        out["systems"].push_back({{"id", p.name}, {"description", p.description}});
    return out;
}

}  // namespace orbitlab::harness
