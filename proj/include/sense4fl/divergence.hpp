#pragma once

#include "sense4fl/scenario.hpp"

namespace sense4fl {

// Class-wise L1 distance between two distributions, range [0, 2]. This is
// twice the total variation distance; documented here to avoid the 1/2
// convention trap.
double emd(const ClassDistribution& p, const ClassDistribution& q);

// Q-weighted mixture of all block distributions: p^i = sum_b Q_b p_b^i / sum_b Q_b.
ClassDistribution global_distribution(const Scenario& s);

// l-weighted block mixture; the reference distribution every divergence is
// measured against.
ClassDistribution target_distribution(const Scenario& s);

// Distribution of the data a vehicle holds after collecting from the first
// `stop` blocks of trajectory m. Requires collected_count <= stop <= N.
ClassDistribution collected_distribution(const Scenario& s, int vehicle_id, int trajectory,
                                         int stop);

// Mixture of arbitrary distributions with non-negative weights (need not sum
// to one); renormalized once at the end.
ClassDistribution mix(const std::vector<ClassDistribution>& dists,
                      const std::vector<double>& weights);

}  // namespace sense4fl
