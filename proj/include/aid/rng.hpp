#ifndef AID_RNG_HPP
#define AID_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace aid {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic random source. All randomness in a run flows from one root
// seed through named sub-streams, so any component can be replayed in
// isolation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Sub-stream derived from (seed, name); independent of draw order on
    // the parent.
    static Rng stream(std::uint64_t seed, std::string_view name) {
        return Rng(detail::splitmix64(seed ^ detail::fnv1a(name)));
    }

    static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
        return Rng(detail::splitmix64(detail::splitmix64(seed ^ detail::fnv1a(name)) + index));
    }

    double uniform() { return uni_(gen_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; implementation-pinned so streams are stable across
    // standard libraries.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t integer(std::uint64_t bound) {  // uniform in [0, bound)
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(gen_()) * bound) >> 64);
    }

private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace aid

#endif
