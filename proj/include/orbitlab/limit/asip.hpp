#pragma once

#include <cmath>
#include <vector>

#include "orbitlab/limit/estimators.hpp"
#include "orbitlab/limit/schedule.hpp"
#include "orbitlab/parallel.hpp"
#include "orbitlab/transport_plan.hpp"

namespace orbitlab {

struct AsipPairRecord {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double bound = 0;         ///< 2 (n1 + n2) ||f||
    double max_difference = 0;
    double max_ratio = 0;     ///< max of D_n / r(n) over the window
    std::size_t violations = 0;
};

struct AsipDecayBin {
    std::size_t begin = 0;  ///< n range [begin, end)
    std::size_t end = 0;
    double max_ratio = 0;   ///< max over pairs and n of D_n / r(n)
};

struct AsipReport {
    std::size_t pairs_requested = 0;
    std::size_t pairs_evaluated = 0;
    std::size_t defect_outcomes = 0;  ///< draws landing in the uncoupled mass
    double excluded_mass = 0;
    std::size_t bound_violations = 0;  ///< (pair, n) with n >= max(n1, n2) and D_n above the bound
    std::size_t ratio_violations = 0;  ///< pairs whose window ratio exceeds bound / r(window_start)
    std::size_t window_start = 0;
    double max_ratio = 0;
    double sup_f = 0;
    std::vector<AsipPairRecord> pair_records;
    std::vector<AsipDecayBin> decay;

    bool passed() const { return pairs_evaluated > 0 && bound_violations == 0 && ratio_violations == 0; }
};

struct AsipOptions {
    std::size_t n_max = 10000;
    std::size_t pairs = 1000;
    std::size_t window_start = 5000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::size_t workers = 1;
    std::size_t block_size = 64;
};

/// For coupled pairs (x1, x2) drawn from the plan, D_n = |S_n f(x1) - S_n f(x2)|
/// for n <= n_max. Once both orbits have merged (n >= max(n1, n2)) the sums
/// differ only by the first n1 and n2 terms, so D_n <= 2 (n1 + n2) ||f||.
template <class S>
AsipReport asip_transfer_check(const TransportPlan<S>& plan, const CylinderFunction<S>& f, const PowerSchedule& rate,
                               const AsipOptions& options) {
    if (options.n_max == 0) throw Error("asip_transfer_check: n_max must be positive");
    if (options.window_start == 0 || options.window_start > options.n_max)
        throw Error("asip_transfer_check: window start must lie in [1, n_max]");
    const auto fd = to_double_function(compact(f));
    const double sup_f = fd.sup_norm();
    const std::size_t length =
        std::max(options.n_max + std::max<std::size_t>(fd.depth(), 1) - 1, plan.max_word_length());

    std::vector<std::size_t> bin_edges{1};
    while (bin_edges.back() <= options.n_max) bin_edges.push_back(bin_edges.back() * 2);
    const std::size_t bins = bin_edges.size() - 1;
    std::vector<double> rates(options.n_max + 1, 0.0);
    for (std::size_t n = 1; n <= options.n_max; ++n) rates[n] = rate(n);

    struct BlockOut {
        std::vector<AsipPairRecord> records;
        std::size_t defects = 0;
        std::vector<double> bin_max;
    };
    const PairSampler sampler(plan);
    const StreamRng root(options.seed, options.stream);
    const BlockPlan blocks{options.pairs, options.block_size};
    const auto outs = run_blocks(blocks, options.workers, [&](std::size_t b) {
        StreamRng rng = root.child(b);
        BlockOut out;
        out.bin_max.assign(bins, 0.0);
        for (std::size_t i = 0; i < blocks.count(b); ++i) {
            const auto pair = sampler.sample(rng, length);
            if (!pair) {
                ++out.defects;
                continue;
            }
            AsipPairRecord rec;
            rec.n1 = pair->n1;
            rec.n2 = pair->n2;
            rec.bound = 2.0 * static_cast<double>(rec.n1 + rec.n2) * sup_f;
            const std::size_t merged = std::max(rec.n1, rec.n2);
            double s1 = 0, s2 = 0;
            std::size_t bin = 0;
            for (std::size_t n = 1; n <= options.n_max; ++n) {
                s1 += fd.at(pair->x1.view(), n - 1);
                s2 += fd.at(pair->x2.view(), n - 1);
                const double d = std::abs(s1 - s2);
                rec.max_difference = std::max(rec.max_difference, d);
                // Sums of at most n1 + n2 + |n1 - n2| table values: the bound is exact up to rounding.
                if (n >= merged && d > rec.bound * (1 + 1e-12) + 1e-9) ++rec.violations;
                const double ratio = d / rates[n];
                if (n >= options.window_start) rec.max_ratio = std::max(rec.max_ratio, ratio);
                while (n >= bin_edges[bin + 1]) ++bin;
                out.bin_max[bin] = std::max(out.bin_max[bin], ratio);
            }
            out.records.push_back(rec);
        }
        return out;
    });

    AsipReport report;
    report.pairs_requested = options.pairs;
    report.window_start = options.window_start;
    report.sup_f = sup_f;
    report.excluded_mass = to_double(plan.defect);
    for (std::size_t i = 0; i < bins; ++i)
        report.decay.push_back({bin_edges[i], std::min(bin_edges[i + 1], options.n_max + 1), 0.0});
    const double window_rate = rate(options.window_start);
    for (const auto& out : outs) {
        report.defect_outcomes += out.defects;
        for (std::size_t i = 0; i < bins; ++i)
            report.decay[i].max_ratio = std::max(report.decay[i].max_ratio, out.bin_max[i]);
        for (const auto& rec : out.records) {
            report.bound_violations += rec.violations;
            if (rec.max_ratio > rec.bound / window_rate * (1 + 1e-12)) ++report.ratio_violations;
            report.max_ratio = std::max(report.max_ratio, rec.max_ratio);
            report.pair_records.push_back(rec);
        }
    }
    report.pairs_evaluated = report.pair_records.size();
    return report;
}

}  // namespace orbitlab
