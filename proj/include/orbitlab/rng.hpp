#pragma once

#include <cstdint>
#include <random>

namespace orbitlab {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable, splittable generator. A stream is identified by
/// (master_seed, stream_index); child streams are derived by index, so any
/// tree of streams is reproducible independent of how work is scheduled.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index) {
        const std::uint64_t a = splitmix64(master_seed);
        const std::uint64_t b = splitmix64(a ^ splitmix64(stream_index + 0x632be59bd9b4e019ULL));
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        engine_.seed(seq);
    }

    /// Independent child stream; `child(i)` is a pure function of (seed, stream, i).
    StreamRng child(std::uint64_t index) const {
        return StreamRng(master_seed_, splitmix64(stream_index_ * 0x9e3779b97f4a7c15ULL + index + 1));
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~std::uint64_t{0}; }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
};

}  // namespace orbitlab
