#include "sense4fl/rng.hpp"

#include <stdexcept>

namespace sense4fl {

std::uint64_t Xoshiro256pp::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % n;
}

double Xoshiro256pp::normal() {
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
}

double Xoshiro256pp::gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        const double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Xoshiro256pp::dirichlet(double concentration, int k) {
    std::vector<double> out(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (auto& x : out) {
        x = gamma(concentration);
        sum += x;
    }
    if (sum <= 0.0) {
        // all-zero draw is numerically possible for tiny concentrations
        for (auto& x : out) x = 1.0 / k;
        return out;
    }
    for (auto& x : out) x /= sum;
    return out;
}

int Xoshiro256pp::poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be non-negative");
    if (mean < 30.0) {
        // Knuth multiplication method
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }
    // normal approximation with continuity correction for large means
    const int k = static_cast<int>(std::lround(normal(mean, std::sqrt(mean))));
    return k < 0 ? 0 : k;
}

int Xoshiro256pp::categorical(const std::vector<double>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace sense4fl
