#ifndef INFODYN_RNG_HPP
#define INFODYN_RNG_HPP

#include <cstdint>
#include <random>

namespace infodyn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
    (void)splitmix64(s);
    return splitmix64(s);
}

} // namespace detail

/// Seeded random stream with deterministic child-stream derivation.
///
/// Substreams are derived from the stream's root seed, not from its engine
/// state, so substream(k) yields the same stream no matter how many draws
/// the parent has made. One stream per logical task; never share across
/// threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed)
        : root_(seed), engine_(detail::mix64(seed, 0x1d0d'ecaf'c0ff'ee00ULL)) {}

    /// Child stream identified by (root seed, index).
    RngStream substream(std::uint64_t index) const {
        return RngStream(detail::mix64(root_, index));
    }

    std::uint64_t seed() const { return root_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw strictly inside (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw.
    double normal() {
        std::normal_distribution<double> dist;
        return dist(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t root_;
    std::mt19937_64 engine_;
};

} // namespace infodyn

#endif
