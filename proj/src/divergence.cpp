#include "sense4fl/divergence.hpp"

#include <cmath>
#include <stdexcept>

namespace sense4fl {

double emd(const ClassDistribution& p, const ClassDistribution& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("emd: length mismatch (" + std::to_string(p.size()) + " vs " +
                                    std::to_string(q.size()) + ")");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p.probs[i] - q.probs[i]);
    return d;
}

namespace {

ClassDistribution weighted_block_mixture(const Scenario& s,
                                         double (*weight)(const StreetBlock&)) {
    ClassDistribution out;
    out.probs.assign(static_cast<std::size_t>(s.num_classes()), 0.0);
    double total = 0.0;
    for (const auto& b : s.blocks) {
        const double w = weight(b);
        for (std::size_t i = 0; i < out.size(); ++i) out.probs[i] += w * b.class_dist.probs[i];
        total += w;
    }
    for (auto& p : out.probs) p /= total;
    return out;
}

}  // namespace

ClassDistribution global_distribution(const Scenario& s) {
    return weighted_block_mixture(s, [](const StreetBlock& b) { return b.avg_objects; });
}

ClassDistribution target_distribution(const Scenario& s) {
    return weighted_block_mixture(s, [](const StreetBlock& b) { return b.weight; });
}

ClassDistribution collected_distribution(const Scenario& s, int vehicle_id, int trajectory,
                                         int stop) {
    const auto& v = s.vehicle(vehicle_id);
    if (trajectory < 0 || trajectory >= static_cast<int>(v.trajectories.size()))
        throw std::out_of_range("collected_distribution: trajectory index " +
                                std::to_string(trajectory));
    const auto& t = v.trajectories[static_cast<std::size_t>(trajectory)];
    if (stop < t.collected_count || stop > t.length())
        throw std::out_of_range("collected_distribution: stop " + std::to_string(stop) +
                                " outside [" + std::to_string(t.collected_count) + ", " +
                                std::to_string(t.length()) + "]");
    ClassDistribution out;
    out.probs.assign(static_cast<std::size_t>(s.num_classes()), 0.0);
    double total = 0.0;
    for (int n = 0; n < stop; ++n) {
        const auto& b = s.block(t.blocks[static_cast<std::size_t>(n)]);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.probs[i] += b.avg_objects * b.class_dist.probs[i];
        total += b.avg_objects;
    }
    for (auto& p : out.probs) p /= total;
    return out;
}

ClassDistribution mix(const std::vector<ClassDistribution>& dists,
                      const std::vector<double>& weights) {
    if (dists.empty() || dists.size() != weights.size())
        throw std::invalid_argument("mix: need matching non-empty inputs");
    ClassDistribution out;
    out.probs.assign(dists.front().size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < dists.size(); ++k) {
        if (dists[k].size() != out.size()) throw std::invalid_argument("mix: length mismatch");
        for (std::size_t i = 0; i < out.size(); ++i)
            out.probs[i] += weights[k] * dists[k].probs[i];
        total += weights[k];
    }
    if (total <= 0.0) throw std::invalid_argument("mix: weights sum to zero");
    for (auto& p : out.probs) p /= total;
    return out;
}

}  // namespace sense4fl
