#pragma once

#include <string>

#include <json.hpp>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/transport_plan.hpp"

namespace orbitlab {

/// Scalars are written as strings: "p/q" in exact mode, %.17g otherwise.
template <class S>
nlohmann::json scalar_to_json(const S& x) {
    return ScalarTraits<S>::to_string(x);
}

/// Accepts a JSON number or a string ("0.3", "1/3"). Numbers are read from
/// their decimal text, so 0.3 is 3/10 in exact mode.
template <class S>
S scalar_from_json(const nlohmann::json& j) {
    if (j.is_string()) return ScalarTraits<S>::parse(j.get<std::string>());
    if (j.is_number_integer()) return S(j.get<long long>());
    if (j.is_number()) return ScalarTraits<S>::parse(j.dump());
    throw Error("expected a number or a numeric string, got " + j.dump());
}

template <class S>
nlohmann::json to_json(const CylinderFunction<S>& f) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : f.values()) values.push_back(scalar_to_json(v));
    return {{"alphabet", f.alphabet()}, {"depth", f.depth()}, {"values", values}};
}

/// {"depth": d, "values": [...]}; "alphabet" defaults to the caller's.
template <class S>
CylinderFunction<S> cylinder_function_from_json(const nlohmann::json& j, std::size_t alphabet) {
    if (!j.is_object() || !j.contains("values")) throw Error("cylinder function: expected {depth, values}");
    const std::size_t k = j.value("alphabet", alphabet);
    if (k != alphabet) throw Error("cylinder function: alphabet does not match the system");
    std::vector<S> values;
    for (const auto& v : j.at("values")) values.push_back(scalar_from_json<S>(v));
    return {k, j.value("depth", std::size_t{0}), std::move(values)};
}

/// Plan with atoms sorted by (w1, w2).
template <class S>
nlohmann::json to_json(const TransportPlan<S>& plan) {
    auto sorted = plan.atoms;
    canonicalize_atoms(sorted);
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : sorted) atoms.push_back({{"w1", a.w1.str()}, {"w2", a.w2.str()}, {"mass", scalar_to_json(a.mass)}});
    return {{"system", plan.system.descriptor()},
            {"atoms", atoms},
            {"defect", scalar_to_json(plan.defect)},
            {"tv_error_budget", scalar_to_json(plan.tv_error_budget)},
            {"declared_left", to_json(plan.declared_left)},
            {"declared_right", to_json(plan.declared_right)}};
}

}  // namespace orbitlab
