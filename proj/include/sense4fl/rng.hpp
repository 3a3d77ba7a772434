#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sense4fl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a stream seed from a base seed and up to three indices. Used to give
// every (vehicle, trajectory, stop) Monte Carlo stream and every experiment
// seed its own decorrelated generator state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = base;
    s ^= splitmix64(a += 0x2545f4914f6cdd1dULL);
    s ^= splitmix64(b += 0x9e3779b97f4a7c15ULL) << 1;
    s ^= splitmix64(c += 0xd1342543de82ef95ULL) << 2;
    return s;
}

// xoshiro256++ (Blackman & Vigna). Portable 64-bit generator; identical
// sequences on every platform for a given seed, which the scenario generator
// and all simulation code rely on.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
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

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n);

    // standard normal via the polar method (rejection; no cached state)
    double normal();

    double normal(double mean, double std) { return mean + std * normal(); }

    // Gamma(shape, 1) via Marsaglia-Tsang, with the boost trick for shape < 1.
    double gamma(double shape);

    // symmetric Dirichlet over k categories
    std::vector<double> dirichlet(double concentration, int k);

    int poisson(double mean);

    int categorical(const std::vector<double>& probs);

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace sense4fl
