#pragma once

#include <cstdint>

namespace mpedge {

// Counter-based pseudo-random stream. Every output is a pure function of
// (key, counter), so a stream can be copied, replayed, and split into
// statistically independent child streams without touching the parent.
// Trial t of an experiment always derives the same child key no matter how
// trials are scheduled across threads.
//
// The output function is the SplitMix64 finalizer applied to
// key + counter * golden_gamma (Steele, Lea, Flood 2014).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed + kSeedTag)) {}

    // Child stream for a given id; children with distinct ids are
    // independent of each other and of further draws from the parent.
    RngStream split(std::uint64_t stream_id) const {
        RngStream child(0);
        child.key_ = mix(key_ ^ mix(stream_id + kSplitTag));
        child.counter_ = 0;
        child.has_cached_gaussian_ = false;
        return child;
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    // Uniform on [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log() argument.
    double next_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    bool next_sign_bit() { return (next_u64() >> 63) != 0; }

    // Standard normal draw (Box-Muller; the second variate of each pair is
    // cached, so the per-stream draw sequence is deterministic).
    double next_gaussian();

    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kSeedTag = 0x8FB2D593A1C4E7F0ull;
    static constexpr std::uint64_t kSplitTag = 0x5851F42D4C957F2Dull;

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

}  // namespace mpedge
