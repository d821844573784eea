#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace bcran {

// 64-bit FNV-1a. Used for config hashing and for naming RNG substreams.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// mt19937_64 with hand-rolled variate transforms. The standard pins the
// engine's output sequence but not the library distributions', so the
// transforms live here to keep runs reproducible across toolchains.
class Rng {
 public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
    }

    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

 private:
    std::mt19937_64 engine_;
};

// Seed for a named substream of a master seed. Modules draw from their own
// stream so that toggling one feature does not shift another's sequence.
inline uint64_t substream_seed(uint64_t master_seed, std::string_view name) {
    return splitmix64(master_seed ^ fnv1a64(name));
}

inline Rng substream(uint64_t master_seed, std::string_view name) {
    return Rng(substream_seed(master_seed, name));
}

}  // namespace bcran
