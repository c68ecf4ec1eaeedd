#pragma once

// Deterministic random streams. Every random quantity in the project flows
// from one 64-bit master seed through labelled substreams, so a single
// replication (or a single bootstrap draw inside it) can be regenerated in
// isolation and parallel scheduling cannot change any result. We roll our
// own generator and distributions because the std:: distribution objects
// are implementation-defined and would break byte-identical reproducibility
// across standard libraries.

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdag {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a, used to hash substream labels into the seeding chain
inline std::uint64_t hash_label(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// derive an independent child seed from (master, replication, label)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                 const std::string& label) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= replication * 0x9e3779b97f4a7c15ull;
    std::uint64_t b = splitmix64(s);
    s ^= hash_label(label);
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ c;
}

// xoshiro256++ with splitmix64 seeding
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_spare_ = false;
    }

    Rng(std::uint64_t master, std::uint64_t replication, const std::string& label)
        : Rng(derive_seed(master, replication, label)) {}

    // independent labelled child stream (does not disturb this stream)
    Rng substream(const std::string& label, std::uint64_t index = 0) const {
        return Rng(derive_seed(s_[0] ^ s_[3], index, label));
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n), unbiased via 128-bit multiply
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
        while (true) {
            std::uint64_t x = next();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= n) {
                std::uint64_t t = (0 - static_cast<std::uint64_t>(n)) % n;
                if (lo < t) continue;
            }
            return static_cast<std::size_t>(m >> 64);
        }
    }

    // standard normal, Marsaglia polar with one cached spare
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        double f = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // gamma(shape, 1) via Marsaglia-Tsang; shape boosting below 1
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("Rng::gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            while (u == 0.0) u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_;
};

}  // namespace mdag
