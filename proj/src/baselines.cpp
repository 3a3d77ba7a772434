#include "sense4fl/baselines.hpp"

#include <algorithm>
#include <set>

#include "sense4fl/optimizer.hpp"
#include "sense4fl/rng.hpp"
#include "sense4fl/timing.hpp"

namespace sense4fl {

std::vector<int> minimal_stops(const Scenario& s, int vehicle_id) {
    std::vector<int> out;
    for (const auto& t : s.vehicle(vehicle_id).trajectories) out.push_back(t.collected_count);
    return out;
}

std::vector<int> full_stops(const Scenario& s, int vehicle_id) {
    std::vector<int> out;
    for (const auto& t : s.vehicle(vehicle_id).trajectories) out.push_back(t.length());
    return out;
}

namespace {

void check_enough_vehicles(const Scenario& s) {
    if (s.budget > s.num_vehicles())
        throw InfeasibleScenarioError("budget exceeds vehicle count");
}

// Top-S by descending score with ascending vehicle-id tie-break; g = c.
Decision top_by_score(const Scenario& s, const std::unordered_map<int, double>& scores) {
    check_enough_vehicles(s);
    std::vector<int> ids;
    for (const auto& v : s.vehicles) {
        if (!scores.count(v.id))
            throw ValidationError("missing score for vehicle " + std::to_string(v.id));
        ids.push_back(v.id);
    }
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        const double sa = scores.at(a), sb = scores.at(b);
        return sa != sb ? sa > sb : a < b;
    });
    Decision d;
    for (int i = 0; i < s.budget; ++i) {
        const int vid = ids[static_cast<std::size_t>(i)];
        d.selected.push_back(vid);
        d.stops.emplace(vid, minimal_stops(s, vid));
    }
    std::sort(d.selected.begin(), d.selected.end());
    return d;
}

}  // namespace

Decision random_select(const Scenario& s, std::uint64_t seed) {
    check_enough_vehicles(s);
    Xoshiro256pp rng(derive_seed(seed, 0x72616e64ULL));

    // Fisher-Yates prefix for the subset
    std::vector<int> ids;
    for (const auto& v : s.vehicles) ids.push_back(v.id);
    for (int i = 0; i < s.budget; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) + rng.uniform_int(ids.size() - static_cast<std::size_t>(i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(s.budget));
    std::sort(ids.begin(), ids.end());

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

Decision uploading_centric(const Scenario& s, const TimingMode& mode) {
    std::unordered_map<int, double> score;
    for (const auto& v : s.vehicles) {
        double expected = 0.0;
        for (std::size_t m = 0; m < v.trajectories.size(); ++m) {
            const int c = v.trajectories[m].collected_count;
            expected += v.trajectories[m].prob *
                        reception_probability(s, v.id, static_cast<int>(m), c, mode).q_rcv;
        }
        score.emplace(v.id, expected);
    }
    return top_by_score(s, score);
}

Decision coverage_centric(const Scenario& s) {
    check_enough_vehicles(s);
    std::set<int> covered;
    std::vector<int> remaining;
    for (const auto& v : s.vehicles) remaining.push_back(v.id);

    Decision d;
    for (int pick = 0; pick < s.budget; ++pick) {
        int best_vid = -1;
        double best_gain = -1.0;
        for (int vid : remaining) {
            const auto& v = s.vehicle(vid);
            double gain = 0.0;
            for (const auto& t : v.trajectories) {
                std::set<int> fresh(t.blocks.begin(), t.blocks.end());
                double added = 0.0;
                for (int b : fresh)
                    if (!covered.count(b)) added += 1.0;
                gain += t.prob * added;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best_vid = vid;
            }
        }
        d.selected.push_back(best_vid);
        d.stops.emplace(best_vid, full_stops(s, best_vid));
        for (const auto& t : s.vehicle(best_vid).trajectories)
            covered.insert(t.blocks.begin(), t.blocks.end());
        remaining.erase(std::find(remaining.begin(), remaining.end(), best_vid));
    }
    std::sort(d.selected.begin(), d.selected.end());
    return d;
}

Decision gradient_based(const Scenario& s, const std::unordered_map<int, double>& gradient_norms) {
    return top_by_score(s, gradient_norms);
}

Decision power_of_choice(const Scenario& s, const std::unordered_map<int, double>& local_losses) {
    return top_by_score(s, local_losses);
}

Decision full_data(const Scenario& s, Decision base) {
    for (int vid : base.selected) base.stops[vid] = full_stops(s, vid);
    return base;
}

Decision selection_only(const Scenario& s, Decision base) {
    for (int vid : base.selected) base.stops[vid] = minimal_stops(s, vid);
    return base;
}

}  // namespace sense4fl
