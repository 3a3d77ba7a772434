#pragma once

#include <cstdint>
#include <unordered_map>

#include "sense4fl/objective.hpp"

namespace sense4fl {

// Stop vectors shared by several baselines.
std::vector<int> minimal_stops(const Scenario& s, int vehicle_id);  // g = c
std::vector<int> full_stops(const Scenario& s, int vehicle_id);     // g = N

// Uniform S-subset with uniform stop choices, seeded.
Decision random_select(const Scenario& s, std::uint64_t seed);

// Highest trajectory-probability-weighted reception probability at g = c;
// vehicles stop collecting on selection.
Decision uploading_centric(const Scenario& s, const TimingMode& mode);

// Greedy maximum coverage of street blocks, expected over trajectories.
// Coverage is monotone in the stop counts, so candidates collect their full
// trajectories.
Decision coverage_centric(const Scenario& s);

// Top-S by externally supplied per-vehicle gradient norm; g = c.
Decision gradient_based(const Scenario& s, const std::unordered_map<int, double>& gradient_norms);

// Top-S by externally supplied per-vehicle local loss; g = c.
Decision power_of_choice(const Scenario& s, const std::unordered_map<int, double>& local_losses);

// Ablations: keep the base decision's vehicles, override every stop.
Decision full_data(const Scenario& s, Decision base);
Decision selection_only(const Scenario& s, Decision base);

}  // namespace sense4fl
