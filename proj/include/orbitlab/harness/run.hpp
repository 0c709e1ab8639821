#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbitlab/coupling.hpp"
#include "orbitlab/harness/config.hpp"
#include "orbitlab/json_io.hpp"
#include "orbitlab/limit/asip.hpp"
#include "orbitlab/limit/estimators.hpp"
#include "orbitlab/mixing.hpp"

#ifndef ORBITLAB_VERSION
#define ORBITLAB_VERSION "0.1.0"
#endif

namespace orbitlab::harness {

inline constexpr int csv_schema_version = 1;
inline constexpr const char* csv_columns = "experiment,n,estimate,stderr,ks,m_n_mass,seed";

struct CsvRow {
    std::string experiment;
    std::size_t n = 0;
    std::string estimate;
    std::string stderr_;
    std::string ks;
    std::string m_n_mass;
    std::uint64_t seed = 0;
};

struct ThresholdCheck {
    std::string name;
    double observed = 0;
    double threshold = 0;
    bool passed = false;
};

struct RunRecord {
    std::string config_hash;
    std::string version = ORBITLAB_VERSION;
    std::string experiment;
    std::string name;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    double wall_time_s = 0;
    std::vector<CsvRow> rows;
    std::vector<ThresholdCheck> checks;
    std::vector<std::string> notes;
    json summary = json::object();
    json outputs = json::object();

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    int exit_code() const { return passed() ? 0 : 2; }
};

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_text(const std::vector<CsvRow>& rows) {
    std::string out = "# orbitlab csv v" + std::to_string(csv_schema_version) + "\n";
    out += csv_columns;
    out += "\n";
    for (const auto& r : rows)
        out += r.experiment + "," + std::to_string(r.n) + "," + r.estimate + "," + r.stderr_ + "," + r.ks + "," +
               r.m_n_mass + "," + std::to_string(r.seed) + "\n";
    return out;
}

inline json to_json(const RunRecord& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"observed", c.observed}, {"threshold", c.threshold}, {"passed", c.passed}});
    return {{"config_hash", r.config_hash}, {"version", r.version},     {"csv_schema", csv_schema_version},
            {"experiment", r.experiment},   {"name", r.name},           {"seed", r.seed},
            {"workers", r.workers},         {"wall_time_s", r.wall_time_s}, {"rows", r.rows.size()},
            {"checks", checks},             {"passed", r.passed()},     {"notes", r.notes},
            {"summary", r.summary},         {"outputs", r.outputs}};
}

namespace detail {

inline double threshold_value(const json& j) { return ScalarTraits<double>::parse(j.is_string() ? j.get<std::string>() : j.dump()); }

inline PowerSchedule schedule_from(const json& params, const std::string& key, const PowerSchedule& fallback) {
    if (!params.contains(key)) return fallback;
    const auto& j = params.at(key);
    PowerSchedule s = fallback;
    if (j.contains("coefficient")) s.coefficient = scalar_from_json<Rational>(j.at("coefficient"));
    if (j.contains("exponent")) s.exponent = scalar_from_json<Rational>(j.at("exponent"));
    return s;
}

template <class S>
FullCouplingOptions<S> coupling_options(const json& p) {
    FullCouplingOptions<S> o;
    o.epsilon = scalar_from_json<S>(p.at("epsilon"));
    o.max_rounds = p.value("max_rounds", std::size_t{10});
    if (p.contains("mass_floor")) o.mass_floor = scalar_from_json<S>(p.at("mass_floor"));
    if (p.contains("max_round_atoms")) o.max_round_atoms = p.at("max_round_atoms").get<std::size_t>();
    o.gluing = p.value("gluing", std::string("independent")) == "monotone" ? Gluing::monotone : Gluing::independent;
    return o;
}

template <class S>
json rounds_json(const FullCoupling<S>& fc) {
    json rounds = json::array();
    for (const auto& r : fc.rounds)
        rounds.push_back({{"n_used", r.n_used}, {"coupled_mass", scalar_to_json(r.coupled_mass)},
                          {"defect_after", scalar_to_json(r.defect_after)}, {"atoms", r.atom_count},
                          {"max_word_length", r.max_word_length}});
    return rounds;
}

class Runner {
public:
    Runner(const ExperimentConfig& config, RunRecord& record) : c_(config), r_(record) {}

    template <class S>
    void run() {
        const auto system = make_system<S>(c_.system);
        const std::string& k = c_.kind;
        if (k == "couple") couple(system);
        else if (k == "eagleson" || k == "two-sided" || k == "multi-point") conditioned(system);
        else if (k == "l2bound") l2bound(system);
        else if (k == "invariance") invariance(system);
        else if (k == "asip") asip(system);
        else if (k == "nonmixing-demo") nonmixing(system);
        else throw Error("unknown experiment kind '" + k + "'");
    }

private:
    const ExperimentConfig& c_;
    RunRecord& r_;

    const json& p() const { return c_.params; }

    void check(const std::string& name, double observed, double threshold, bool passed) {
        r_.checks.push_back({name, observed, threshold, passed});
    }

    std::optional<double> threshold(const std::string& key) const {
        if (!c_.thresholds.contains(key)) return std::nullopt;
        return threshold_value(c_.thresholds.at(key));
    }

    void row(std::size_t n, std::string estimate, std::string se = "", std::string ks = "", std::string mass = "") {
        r_.rows.push_back({c_.name, n, std::move(estimate), std::move(se), std::move(ks), std::move(mass), c_.seed});
    }

    MonteCarloOptions mc() const {
        MonteCarloOptions o;
        o.samples = p().value("samples", std::size_t{100000});
        o.seed = c_.seed;
        o.workers = c_.workers;
        return o;
    }

    template <class S>
    void write_plan(const TransportPlan<S>& plan) {
        if (c_.plan_path.empty()) return;
        std::ofstream out(c_.plan_path);
        if (!out) throw Error("cannot write plan '" + c_.plan_path + "'");
        out << orbitlab::to_json(plan).dump(2) << "\n";
        r_.outputs["plan"] = c_.plan_path;
    }

    template <class S>
    FullCoupling<S> build_coupling(const ShiftSystem<S>& system) {
        const auto f1 = make_observable<S>(p().at("f1"), system.alphabet());
        const auto f2 = make_observable<S>(p().at("f2"), system.alphabet());
        auto fc = full_coupling(system, f1, f2, coupling_options<S>(p()));
        r_.summary["coupling"] = {{"stop_reason", to_string(fc.stop_reason)},
                                  {"defect", scalar_to_json(fc.plan.defect)},
                                  {"atoms", fc.plan.atoms.size()},
                                  {"rounds", rounds_json(fc)}};
        if (fc.depth_cap_failure) r_.notes.push_back(*fc.depth_cap_failure);
        return fc;
    }

    template <class S>
    void couple(const ShiftSystem<S>& system) {
        const auto fc = build_coupling(system);
        for (std::size_t i = 0; i < fc.rounds.size(); ++i)
            row(i + 1, ScalarTraits<S>::to_string(fc.rounds[i].defect_after));
        write_plan(fc.plan);

        const double defect = to_double(fc.plan.defect);
        const double limit = threshold("defect").value_or(to_double(scalar_from_json<S>(p().at("epsilon"))));
        check("defect", defect, limit, defect <= limit);

        const bool left_ok = same_function(add(left_marginal(fc.plan), fc.residual1), fc.plan.declared_left);
        const bool right_ok = same_function(add(right_marginal(fc.plan), fc.residual2), fc.plan.declared_right);
        check("marginals", left_ok && right_ok ? 1 : 0, 1, left_ok && right_ok);

        const std::size_t pairs = p().value("sample_pairs", std::size_t{0});
        if (pairs > 0 && !fc.plan.atoms.empty()) {
            const PairSampler sampler(fc.plan);
            StreamRng rng(c_.seed, 0);
            const std::size_t length = fc.plan.max_word_length() + 64;
            std::size_t bad = 0, defects = 0;
            for (std::size_t i = 0; i < pairs; ++i) {
                const auto pair = sampler.sample(rng, length);
                if (!pair) {
                    ++defects;
                    continue;
                }
                const auto a = pair->x1.view().subspan(pair->n1);
                const auto b = pair->x2.view().subspan(pair->n2);
                const std::size_t m = std::min(a.size(), b.size());
                if (!std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(m), b.begin())) ++bad;
            }
            r_.summary["sampled_pairs"] = {{"pairs", pairs}, {"defect_outcomes", defects}, {"suffix_mismatches", bad}};
            check("suffix_agreement", static_cast<double>(bad), 0, bad == 0);
        }
    }

    template <class S>
    void conditioned(const ShiftSystem<S>& system) {
        const std::size_t k = system.alphabet();
        const auto f = make_observable<S>(p().at("f"), k);
        const auto& g = test_function(p().at("g").get<std::string>());
        const auto bn = schedule_from(p(), "normalization", NormalizationSchedule{}.normalization);
        const auto opts = mc();
        json per_n = json::array();
        for (const auto& nj : p().at("n")) {
            const auto n = nj.get<std::size_t>();
            ConditionedEstimate est;
            if (c_.kind == "eagleson") {
                est = eagleson_check(system, f, bn, make_observable<S>(p().at("phi"), k), g, n, opts);
            } else if (c_.kind == "two-sided") {
                est = two_sided_conditioned_check(system, f, bn, make_observable<S>(p().at("phi1"), k),
                                                  make_observable<S>(p().at("phi2"), k), g, n, opts);
            } else {
                std::vector<CylinderFunction<S>> phis;
                std::vector<std::size_t> times;
                for (const auto& j : p().at("phis")) phis.push_back(make_observable<S>(j, k));
                for (const auto& j : p().at("time_fractions")) {
                    const Rational t = scalar_from_json<Rational>(j) * Rational(static_cast<long long>(n));
                    times.push_back(static_cast<std::size_t>(
                        BigInt(boost::multiprecision::numerator(t) / boost::multiprecision::denominator(t))
                            .template convert_to<unsigned long long>()));
                }
                est = multi_point_conditioned_check(system, f, bn, phis, times, g, n, opts);
            }
            row(n, format_double(est.gap()), format_double(est.stderr_), est.ks ? format_double(*est.ks) : "",
                est.mass_exact);
            per_n.push_back({{"n", n}, {"path", to_string(est.path)}, {"integral", est.integral},
                             {"reference", est.reference}, {"gap", est.gap()}, {"stderr", est.stderr_},
                             {"ks", est.ks ? json(*est.ks) : json(nullptr)}, {"m_n_mass", est.mass_exact}});
            if (!est.mass_positive) r_.notes.push_back("m_n(X) <= 0 at n=" + std::to_string(n));
            const std::string at = "@" + std::to_string(n);
            if (const auto t = threshold("gap"))
                check("gap" + at, std::abs(est.gap()), *t + 3 * est.stderr_,
                      std::abs(est.gap()) <= *t + 3 * est.stderr_);
            if (const auto t = threshold("ks")) check("ks" + at, est.ks.value_or(1.0), *t, est.ks && *est.ks <= *t);
        }
        r_.summary["estimates"] = per_n;
    }

    template <class S>
    void l2bound(const ShiftSystem<S>& system) {
        const auto phi1 = make_observable<S>(p().at("phi1"), system.alphabet());
        const auto phi2 = make_observable<S>(p().at("phi2"), system.alphabet());
        const auto w = l2_bound_witness(system, phi1, phi2, scalar_from_json<S>(p().at("epsilon")));
        row(w.lag, format_double(w.verified_norm()));
        r_.summary["witness"] = {{"k", w.k}, {"N", w.lag}, {"A", w.a}, {"C", scalar_to_json(w.c)},
                                 {"internal_epsilon", scalar_to_json(w.internal_epsilon)},
                                 {"verified_squared", scalar_to_json(w.verified_squared)},
                                 {"verified_norm", w.verified_norm()}};
        check("witness_verified", w.verified_norm(), to_double(scalar_from_json<S>(p().at("epsilon"))), w.verified);
    }

    template <class S>
    void invariance(const ShiftSystem<S>& system) {
        const std::size_t k = system.alphabet();
        const auto f = make_observable<S>(p().at("f"), k);
        const auto phi1 = make_observable<S>(p().at("phi1"), k);
        const auto phi2 = make_observable<S>(p().at("phi2"), k);
        const auto& g = test_function(p().at("g").get<std::string>());
        const auto bn = schedule_from(p(), "normalization", NormalizationSchedule{}.normalization);
        json per_n = json::array();
        for (const auto& nj : p().at("n")) {
            const auto n = nj.get<std::size_t>();
            const auto gap = invariance_gap(system, f, bn, phi1, phi2, g, n, mc());
            row(n, format_double(gap.estimate), format_double(gap.stderr_));
            per_n.push_back({{"n", n}, {"estimate", gap.estimate}, {"stderr", gap.stderr_}, {"constant", gap.constant},
                             {"bound", gap.bound},
                             {"bound_exact", gap.bound_exact ? json(gap.bound_exact->str()) : json(nullptr)}});
            check("within_bound@" + std::to_string(n), gap.estimate, gap.bound + 3 * gap.stderr_, gap.within_bound);
        }
        r_.summary["gaps"] = per_n;
    }

    template <class S>
    void asip(const ShiftSystem<S>& system) {
        const auto fc = build_coupling(system);
        write_plan(fc.plan);
        const auto f = make_observable<S>(p().at("f"), system.alphabet());
        const auto rate = schedule_from(p(), "rate", NormalizationSchedule{}.rate);
        AsipOptions o;
        o.n_max = p().value("n_max", std::size_t{10000});
        o.pairs = p().value("pairs", std::size_t{1000});
        o.window_start = p().value("window_start", o.n_max / 2);
        o.seed = c_.seed;
        o.workers = c_.workers;
        const auto report = asip_transfer_check(fc.plan, f, rate, o);
        for (const auto& bin : report.decay) row(bin.end - 1, format_double(bin.max_ratio));
        r_.summary["asip"] = {{"pairs_requested", report.pairs_requested},
                              {"pairs_evaluated", report.pairs_evaluated},
                              {"defect_outcomes", report.defect_outcomes},
                              {"excluded_mass", report.excluded_mass},
                              {"window_start", report.window_start},
                              {"max_ratio", report.max_ratio}};
        check("bound_violations", static_cast<double>(report.bound_violations), 0, report.bound_violations == 0);
        check("ratio_violations", static_cast<double>(report.ratio_violations), 0, report.ratio_violations == 0);
    }

    template <class S>
    void nonmixing(const ShiftSystem<S>& system) {
        const std::size_t k = system.alphabet();
        const auto phi1 = make_observable<S>(p().value("phi1", json("density-0")), k);
        const auto phi2 = make_observable<S>(p().value("phi2", json("density-1")), k);
        const std::size_t n_max = p().value("n_max", std::size_t{16});
        const S product = integrate(system, phi1) * integrate(system, phi2);
        std::vector<S> masses;
        for (std::size_t n = 0; n <= n_max; ++n) {
            masses.push_back(correlation(system, phi1, phi2, n));
            row(n, format_double(to_double(masses.back())), "", "", ScalarTraits<S>::to_string(masses.back()));
        }
        // Eventually period-two and not at the mixing limit: the hypothesis m_n(X) -> 1 fails.
        bool violated = n_max >= 2;
        if (violated) {
            const S& a = masses[n_max];
            const S& b = masses[n_max - 1];
            violated = a == masses[n_max - 2] && !(a == b) && !(a == product && b == product);
        }
        r_.summary["mixing_hypothesis"] = violated ? "hypothesis violated" : "not detected";
        r_.summary["product_of_integrals"] = scalar_to_json(product);
        if (violated) r_.notes.push_back("hypothesis violated: m_n(X) does not converge");
        check("nonmixing_detected", violated ? 1 : 0, 1, violated);
    }
};

}  // namespace detail

/// Runs a validated config and writes its CSV and record files.
inline RunRecord run(const ExperimentConfig& config) {
    RunRecord record;
    record.config_hash = hex64(config_hash(config.document));
    record.experiment = config.kind;
    record.name = config.name;
    record.seed = config.seed;
    record.workers = config.workers;
    const auto start = std::chrono::steady_clock::now();
    detail::Runner runner(config, record);
    if (config.arithmetic == "float") runner.run<double>();
    else runner.run<Rational>();
    record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!config.csv_path.empty()) {
        std::ofstream out(config.csv_path, std::ios::binary);
        if (!out) throw Error("cannot write csv '" + config.csv_path + "'");
        out << csv_text(record.rows);
        record.outputs["csv"] = config.csv_path;
    }
    if (!config.record_path.empty()) {
        record.outputs["record"] = config.record_path;
        std::ofstream out(config.record_path);
        if (!out) throw Error("cannot write record '" + config.record_path + "'");
        out << to_json(record).dump(2) << "\n";
    }
    return record;
}

}  // namespace orbitlab::harness
