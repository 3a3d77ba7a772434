#pragma once

// Shared fixtures: a tiny hand-checkable scenario plus random decision draws
// for property tests.

#include <vector>

#include "sense4fl/objective.hpp"
#include "sense4fl/rng.hpp"
#include "sense4fl/scenario.hpp"

namespace testutil {

using namespace sense4fl;

// Two blocks, two classes, one two-block vehicle. Hand numbers:
//   global dist (0.35, 0.65), target dist (0.56, 0.44)
//   collected at g=1: (0.8, 0.2), at g=2: (0.35, 0.65)
//   rho at g=1: 0.6, at g=2: 1.0
inline Scenario tiny_scenario() {
    Scenario s;
    s.blocks = {
        {1, 100.0, {{0.8, 0.2}}, 0.6},
        {2, 300.0, {{0.2, 0.8}}, 0.4},
    };
    Trajectory t;
    t.blocks = {1, 2};
    t.prob = 1.0;
    t.collected_count = 1;
    t.sojourn.mean_s = {30.0, 30.0};
    t.sojourn.std_s = {0.0, 0.0};
    VehicleProfile v;
    v.id = 1;
    v.flops = 4e10;
    v.cycles_per_sample = 9.8304e7;
    v.min_rate_bps = 5e7;
    v.trajectories = {t};
    s.vehicles = {v};
    s.budget = 1;
    validate_and_normalize(s);
    return s;
}

// Adds a second trajectory with probability 0.25 to exercise xi_bar.
inline Scenario tiny_two_trajectory_scenario() {
    Scenario s = tiny_scenario();
    auto& v = s.vehicles.front();
    Trajectory t2 = v.trajectories.front();
    t2.blocks = {2, 1};
    v.trajectories.front().prob = 0.75;
    t2.prob = 0.25;
    v.trajectories.push_back(t2);
    validate_and_normalize(s);
    return s;
}

inline GeneratorSpec small_spec(std::uint64_t seed) {
    GeneratorSpec g;
    g.num_blocks = 6;
    g.num_vehicles = 8;
    g.num_classes = 3;
    g.max_trajectories = 2;
    g.max_blocks_per_trajectory = 4;
    g.budget = 3;
    g.seed = seed;
    return g;
}

// Uniform decision over the eligible vehicles: random subset of size
// min(budget, eligible), random stop per trajectory.
inline Decision random_decision(const Scenario& s, const TimingMode& mode, Xoshiro256pp& rng) {
    std::vector<int> ids = eligible_vehicles(s, mode);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const std::size_t j = i + rng.uniform_int(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    const std::size_t take = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(s.budget));
    ids.resize(take);
    Decision d;
    d.selected = ids;
    for (int vid : ids) {
        std::vector<int> stops;
        for (const auto& t : s.vehicle(vid).trajectories) {
            const int span = t.length() - t.collected_count + 1;
            stops.push_back(t.collected_count +
                            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span))));
        }
        d.stops.emplace(vid, std::move(stops));
    }
    return d;
}

}  // namespace testutil
