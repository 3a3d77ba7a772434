#include "sense4fl/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace sense4fl {

namespace {

double metric_value(const StopEval& e, double delta_eff, double d) {
    return e.rho * (delta_eff * e.d_client - d);
}

}  // namespace

StopEval VehicleTable::evaluate(const std::vector<int>& stops) const {
    StopEval out;
    out.stops = stops;
    double wsum = 0.0;
    for (std::size_t m = 0; m < stops.size(); ++m) {
        const int gi = stops[m] - this->first_stop(m);
        wsum += weight[m][static_cast<std::size_t>(gi)];
        out.rho += traj_prob[m] * lsum[m][static_cast<std::size_t>(gi)];
    }
    if (wsum <= 0.0)
        throw IneligibleVehicleError("vehicle " + std::to_string(vid) +
                                     ": stop vector has zero reception mass");
    out.mixture.probs.assign(dist_mg[0][0].size(), 0.0);
    for (std::size_t m = 0; m < stops.size(); ++m) {
        const int gi = stops[m] - this->first_stop(m);
        const double xi = weight[m][static_cast<std::size_t>(gi)] / wsum;
        if (xi == 0.0) continue;
        out.d_client += xi * emd_mg[m][static_cast<std::size_t>(gi)];
        const auto& dist = dist_mg[m][static_cast<std::size_t>(gi)];
        for (std::size_t i = 0; i < dist.size(); ++i) out.mixture.probs[i] += xi * dist.probs[i];
    }
    return out;
}

VehicleTable build_vehicle_table(const Scenario& s, int vehicle_id, const TimingMode& mode) {
    const auto& v = s.vehicle(vehicle_id);
    const ClassDistribution target = target_distribution(s);

    VehicleTable t;
    t.vid = vehicle_id;
    const std::size_t M = v.trajectories.size();
    t.weight.resize(M);
    t.lsum.resize(M);
    t.emd_mg.resize(M);
    t.dist_mg.resize(M);
    t.traj_prob.resize(M);
    t.first.resize(M);

    long product = 1;
    for (std::size_t m = 0; m < M; ++m) {
        const auto& traj = v.trajectories[m];
        t.traj_prob[m] = traj.prob;
        t.first[m] = traj.collected_count;
        double block_weights = 0.0;
        for (int n = 0; n < traj.collected_count - 1; ++n)
            block_weights += s.block(traj.blocks[static_cast<std::size_t>(n)]).weight;
        for (int g = traj.collected_count; g <= traj.length(); ++g) {
            block_weights += s.block(traj.blocks[static_cast<std::size_t>(g - 1)]).weight;
            const double q_rcv =
                reception_probability(s, vehicle_id, static_cast<int>(m), g, mode).q_rcv;
            t.weight[m].push_back(traj.prob * q_rcv);
            t.lsum[m].push_back(block_weights);
            ClassDistribution dist = collected_distribution(s, vehicle_id, static_cast<int>(m), g);
            t.emd_mg[m].push_back(emd(dist, target));
            t.dist_mg[m].push_back(std::move(dist));
        }
        product *= static_cast<long>(t.weight[m].size());
        if (product > kExactEnumerationCap) t.exact = false;
    }

    if (t.exact) {
        // lexicographic enumeration of the stop-vector product
        std::vector<int> stops(M);
        for (std::size_t m = 0; m < M; ++m) stops[m] = t.first[m];
        for (;;) {
            try {
                t.evals.push_back(t.evaluate(stops));
            } catch (const IneligibleVehicleError&) {
                // zero reception mass everywhere for this vector; not a valid choice
            }
            std::size_t m = M;
            while (m > 0) {
                --m;
                const int max_g = t.first[m] + static_cast<int>(t.weight[m].size()) - 1;
                if (stops[m] < max_g) {
                    ++stops[m];
                    break;
                }
                stops[m] = t.first[m];
                if (m == 0) return t;
            }
        }
    }
    return t;
}

std::pair<StopEval, double> optimize_g_for_metric(const VehicleTable& table, double delta_eff,
                                                  double d) {
    if (table.exact) {
        if (table.evals.empty())
            throw IneligibleVehicleError("vehicle " + std::to_string(table.vid) +
                                         ": no valid stop vector");
        const StopEval* best = nullptr;
        double best_val = 0.0;
        for (const auto& e : table.evals) {
            const double val = metric_value(e, delta_eff, d);
            if (!best || val < best_val) {
                best = &e;
                best_val = val;
            }
        }
        return {*best, best_val};
    }

    // coordinate descent over trajectories, starting from the minimal stops
    const std::size_t M = table.weight.size();
    std::vector<int> stops(M);
    for (std::size_t m = 0; m < M; ++m) stops[m] = table.first[m];
    StopEval cur = table.evaluate(stops);
    double cur_val = metric_value(cur, delta_eff, d);
    for (int sweep = 0; sweep < kCoordinateDescentSweeps; ++sweep) {
        bool changed = false;
        for (std::size_t m = 0; m < M; ++m) {
            const int count = static_cast<int>(table.weight[m].size());
            for (int gi = 0; gi < count; ++gi) {
                const int g = table.first[m] + gi;
                if (g == stops[m]) continue;
                std::vector<int> candidate = stops;
                candidate[m] = g;
                StopEval e;
                try {
                    e = table.evaluate(candidate);
                } catch (const IneligibleVehicleError&) {
                    continue;
                }
                const double val = metric_value(e, delta_eff, d);
                if (val < cur_val) {
                    cur = std::move(e);
                    cur_val = val;
                    stops = std::move(candidate);
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    return {cur, cur_val};
}

Step1Result step1_bisection(const Scenario& s, const std::vector<VehicleTable>& tables, int budget,
                            double delta_eff, double tol) {
    if (static_cast<int>(tables.size()) < budget)
        throw InfeasibleScenarioError("only " + std::to_string(tables.size()) +
                                      " eligible vehicles for budget " + std::to_string(budget));

    struct Probe {
        bool feasible = false;
        std::vector<std::pair<int, StopEval>> chosen;  // (vid, stops) of the sorted prefix
    };
    auto evaluate_at = [&](double d) {
        struct Entry {
            double metric;
            int vid;
            StopEval eval;
        };
        std::vector<Entry> entries;
        entries.reserve(tables.size());
        for (const auto& t : tables) {
            auto [eval, metric] = optimize_g_for_metric(t, delta_eff, d);
            entries.push_back({metric, t.vid, std::move(eval)});
        }
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.metric != b.metric ? a.metric < b.metric : a.vid < b.vid;
        });
        Probe p;
        double sum = 0.0;
        for (int i = 0; i < budget; ++i) {
            sum += entries[static_cast<std::size_t>(i)].metric;
            p.chosen.emplace_back(entries[static_cast<std::size_t>(i)].vid,
                                  std::move(entries[static_cast<std::size_t>(i)].eval));
        }
        p.feasible = sum <= 0.0;
        return p;
    };

    double d_lo = 0.0, d_hi = 2.0 * delta_eff;
    Probe best = evaluate_at(d_hi);  // always feasible: d~ <= 2
    while (d_hi - d_lo >= tol) {
        const double mid = 0.5 * (d_lo + d_hi);
        Probe p = evaluate_at(mid);
        if (p.feasible) {
            d_hi = mid;
            best = std::move(p);
        } else {
            d_lo = mid;
        }
    }

    Step1Result r;
    r.d_dagger = d_hi;
    double rho_sum = 0.0, rhod_sum = 0.0;
    for (auto& [vid, eval] : best.chosen) {
        r.selected.push_back(vid);
        rho_sum += eval.rho;
        rhod_sum += eval.rho * eval.d_client;
        r.stops.emplace(vid, eval.stops);
    }
    std::sort(r.selected.begin(), r.selected.end());
    r.achieved = rho_sum > 0.0 ? delta_eff * rhod_sum / rho_sum : 0.0;
    return r;
}

namespace {

struct SwapState {
    double rho_sum = 0.0;
    double rhod_sum = 0.0;
    std::vector<double> mix_sum;  // rho-weighted, unnormalized

    double omega_with(double extra_rho, double extra_rhod, const std::vector<double>& extra_mix,
                      double dlt, const ClassDistribution& target) const {
        const double rho = rho_sum + extra_rho;
        if (rho <= 0.0) return std::numeric_limits<double>::infinity();
        double global = 0.0;
        for (std::size_t i = 0; i < mix_sum.size(); ++i)
            global += std::abs((mix_sum[i] + extra_mix[i]) / rho - target.probs[i]);
        return dlt * (rhod_sum + extra_rhod) / rho + global;
    }
};

// Best stop vector for inserting one vehicle into a partial selection,
// minimizing the joint objective.
std::pair<StopEval, double> best_insertion(const VehicleTable& table, const SwapState& base,
                                           double dlt, const ClassDistribution& target) {
    auto omega_of = [&](const StopEval& e) {
        std::vector<double> extra(e.mixture.size());
        for (std::size_t i = 0; i < extra.size(); ++i) extra[i] = e.rho * e.mixture.probs[i];
        return base.omega_with(e.rho, e.rho * e.d_client, extra, dlt, target);
    };

    if (table.exact) {
        const StopEval* best = nullptr;
        double best_val = std::numeric_limits<double>::infinity();
        for (const auto& e : table.evals) {
            const double val = omega_of(e);
            if (!best || val < best_val) {
                best = &e;
                best_val = val;
            }
        }
        if (!best)
            throw IneligibleVehicleError("vehicle " + std::to_string(table.vid) +
                                         ": no valid stop vector");
        return {*best, best_val};
    }

    const std::size_t M = table.weight.size();
    std::vector<int> stops(M);
    for (std::size_t m = 0; m < M; ++m) stops[m] = table.first[m];
    StopEval cur = table.evaluate(stops);
    double cur_val = omega_of(cur);
    for (int sweep = 0; sweep < kCoordinateDescentSweeps; ++sweep) {
        bool changed = false;
        for (std::size_t m = 0; m < M; ++m) {
            const int count = static_cast<int>(table.weight[m].size());
            for (int gi = 0; gi < count; ++gi) {
                const int g = table.first[m] + gi;
                if (g == stops[m]) continue;
                std::vector<int> candidate = stops;
                candidate[m] = g;
                StopEval e;
                try {
                    e = table.evaluate(candidate);
                } catch (const IneligibleVehicleError&) {
                    continue;
                }
                const double val = omega_of(e);
                if (val < cur_val) {
                    cur = std::move(e);
                    cur_val = val;
                    stops = std::move(candidate);
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    return {cur, cur_val};
}

}  // namespace

Selection step2_local_search(const Scenario& s, const std::vector<VehicleTable>& tables,
                             Selection initial, const OptimizerConfig& config) {
    const double dlt = delta(s);
    const ClassDistribution target = target_distribution(s);
    const int C = s.num_classes();

    std::unordered_map<int, const VehicleTable*> by_vid;
    for (const auto& t : tables) by_vid.emplace(t.vid, &t);

    // current per-vehicle terms and running sums
    std::unordered_map<int, StopEval> current;
    SwapState state;
    state.mix_sum.assign(static_cast<std::size_t>(C), 0.0);
    for (int vid : initial.decision.selected) {
        StopEval e = by_vid.at(vid)->evaluate(initial.decision.stops_for(vid));
        state.rho_sum += e.rho;
        state.rhod_sum += e.rho * e.d_client;
        for (std::size_t i = 0; i < state.mix_sum.size(); ++i)
            state.mix_sum[i] += e.rho * e.mixture.probs[i];
        current.emplace(vid, std::move(e));
    }
    std::vector<double> zero_mix(static_cast<std::size_t>(C), 0.0);
    double cur_omega = state.omega_with(0.0, 0.0, zero_mix, dlt, target);

    std::vector<int> selected = initial.decision.selected;  // sorted ids
    std::vector<int> candidates;
    for (const auto& t : tables)
        if (!current.count(t.vid)) candidates.push_back(t.vid);
    std::sort(candidates.begin(), candidates.end());

    Selection out = std::move(initial);
    out.iters_used = 0;

    struct SwapResult {
        double omega = std::numeric_limits<double>::infinity();
        int removed = 0;
        int inserted = 0;
        StopEval eval;
    };

    for (int iter = 0; iter < config.max_local_search_iters && !candidates.empty(); ++iter) {
        ++out.iters_used;
        const std::size_t pairs = selected.size() * candidates.size();
        std::vector<SwapResult> results(pairs);

        auto eval_pair = [&](std::size_t p) {
            const int out_vid = selected[p / candidates.size()];
            const int in_vid = candidates[p % candidates.size()];
            const StopEval& removed = current.at(out_vid);
            SwapState base = state;
            base.rho_sum -= removed.rho;
            base.rhod_sum -= removed.rho * removed.d_client;
            for (std::size_t i = 0; i < base.mix_sum.size(); ++i)
                base.mix_sum[i] -= removed.rho * removed.mixture.probs[i];
            auto [eval, val] = best_insertion(*by_vid.at(in_vid), base, dlt, target);
            results[p] = {val, out_vid, in_vid, std::move(eval)};
        };

        if (config.parallel_swaps) {
#pragma omp parallel for schedule(dynamic)
            for (long p = 0; p < static_cast<long>(pairs); ++p)
                eval_pair(static_cast<std::size_t>(p));
        } else {
            for (std::size_t p = 0; p < pairs; ++p) eval_pair(p);
        }

        // deterministic best: (omega, inserted id, removed id)
        const SwapResult* best = nullptr;
        for (const auto& r : results) {
            if (!best || r.omega < best->omega ||
                (r.omega == best->omega &&
                 (r.inserted < best->inserted ||
                  (r.inserted == best->inserted && r.removed < best->removed))))
                best = &r;
        }
        if (!best || !(best->omega < cur_omega)) break;

        // apply the swap
        const StopEval& removed = current.at(best->removed);
        state.rho_sum += best->eval.rho - removed.rho;
        state.rhod_sum += best->eval.rho * best->eval.d_client - removed.rho * removed.d_client;
        for (std::size_t i = 0; i < state.mix_sum.size(); ++i)
            state.mix_sum[i] +=
                best->eval.rho * best->eval.mixture.probs[i] - removed.rho * removed.mixture.probs[i];
        current.erase(best->removed);
        current.emplace(best->inserted, best->eval);
        selected.erase(std::find(selected.begin(), selected.end(), best->removed));
        selected.insert(std::upper_bound(selected.begin(), selected.end(), best->inserted),
                        best->inserted);
        candidates.erase(std::find(candidates.begin(), candidates.end(), best->inserted));
        candidates.insert(std::upper_bound(candidates.begin(), candidates.end(), best->removed),
                          best->removed);
        cur_omega = best->omega;
        out.swap_log.push_back({best->removed, best->inserted, best->omega});
    }

    out.decision.selected = selected;
    out.decision.stops.clear();
    for (const auto& [vid, eval] : current) out.decision.stops.emplace(vid, eval.stops);
    return out;
}

Selection solve(const Scenario& s, const OptimizerConfig& config) {
    const std::vector<int> eligible = eligible_vehicles(s, config.mode);
    if (static_cast<int>(eligible.size()) < s.budget)
        throw InfeasibleScenarioError("only " + std::to_string(eligible.size()) +
                                      " eligible vehicles for budget " +
                                      std::to_string(s.budget));

    std::vector<VehicleTable> tables;
    tables.reserve(eligible.size());
    for (int vid : eligible) tables.push_back(build_vehicle_table(s, vid, config.mode));

    const double dlt = delta(s);
    const double delta_eff = dlt > 0.0 ? dlt : 1.0;  // T = 1 collapses the d-range
    Step1Result s1 = step1_bisection(s, tables, s.budget, delta_eff, config.bisection_tol);

    Selection initial;
    initial.d_dagger = s1.d_dagger;
    initial.decision.selected = s1.selected;
    initial.decision.stops = std::move(s1.stops);

    Selection sel = step2_local_search(s, tables, std::move(initial), config);
    sel.breakdown = omega(s, sel.decision, config.mode);
    return sel;
}

OracleResult brute_force(const Scenario& s, const TimingMode& mode, OracleObjective objective,
                         long max_combinations) {
    const std::vector<int> eligible = eligible_vehicles(s, mode);
    if (static_cast<int>(eligible.size()) < s.budget)
        throw InfeasibleScenarioError("only " + std::to_string(eligible.size()) +
                                      " eligible vehicles for budget " +
                                      std::to_string(s.budget));

    std::vector<VehicleTable> tables;
    for (int vid : eligible) {
        tables.push_back(build_vehicle_table(s, vid, mode));
        if (!tables.back().exact)
            throw InfeasibleScenarioError("vehicle " + std::to_string(vid) +
                                          " has too many stop vectors for enumeration");
    }

    const double dlt = delta(s);
    const double delta_client = dlt > 0.0 ? dlt : 1.0;  // mirrors the step-1 surrogate
    const ClassDistribution target = target_distribution(s);
    const int C = s.num_classes();
    const int S = s.budget;
    const int V = static_cast<int>(tables.size());

    OracleResult best;
    best.objective = std::numeric_limits<double>::infinity();
    long count = 0;

    std::vector<std::pair<int, const StopEval*>> chosen;  // (vid, eval)
    std::vector<double> mix(static_cast<std::size_t>(C));

    auto leaf = [&](double rho_sum, double rhod_sum, const std::vector<double>& mix_sum) {
        if (++count > max_combinations)
            throw InfeasibleScenarioError("instance exceeds the enumeration guard of " +
                                          std::to_string(max_combinations) + " combinations");
        double value;
        if (rho_sum <= 0.0) {
            value = std::numeric_limits<double>::infinity();
        } else if (objective == OracleObjective::ClientOnly) {
            value = delta_client * rhod_sum / rho_sum;
        } else {
            double global = 0.0;
            for (int i = 0; i < C; ++i)
                global += std::abs(mix_sum[static_cast<std::size_t>(i)] / rho_sum -
                                   target.probs[static_cast<std::size_t>(i)]);
            value = dlt * rhod_sum / rho_sum + global;
        }
        if (value < best.objective) {
            best.objective = value;
            best.decision.selected.clear();
            best.decision.stops.clear();
            for (const auto& [vid, eval] : chosen) {
                best.decision.selected.push_back(vid);
                best.decision.stops.emplace(vid, eval->stops);
            }
        }
    };

    // depth-first over vehicles; at each node either skip or take every stop vector
    auto recurse = [&](auto&& self, int idx, int taken, double rho_sum, double rhod_sum,
                       std::vector<double>& mix_sum) -> void {
        if (taken == S) {
            leaf(rho_sum, rhod_sum, mix_sum);
            return;
        }
        if (idx >= V || V - idx < S - taken) return;
        // skip vehicle idx
        self(self, idx + 1, taken, rho_sum, rhod_sum, mix_sum);
        // take vehicle idx with each stop vector
        const auto& t = tables[static_cast<std::size_t>(idx)];
        for (const auto& e : t.evals) {
            chosen.emplace_back(t.vid, &e);
            for (int i = 0; i < C; ++i)
                mix_sum[static_cast<std::size_t>(i)] +=
                    e.rho * e.mixture.probs[static_cast<std::size_t>(i)];
            self(self, idx + 1, taken + 1, rho_sum + e.rho, rhod_sum + e.rho * e.d_client, mix_sum);
            for (int i = 0; i < C; ++i)
                mix_sum[static_cast<std::size_t>(i)] -=
                    e.rho * e.mixture.probs[static_cast<std::size_t>(i)];
            chosen.pop_back();
        }
    };
    std::fill(mix.begin(), mix.end(), 0.0);
    recurse(recurse, 0, 0, 0.0, 0.0, mix);

    best.combinations = count;
    std::sort(best.decision.selected.begin(), best.decision.selected.end());
    return best;
}

std::string decision_to_json_text(const Decision& d) {
    nlohmann::json j;
    j["selected"] = d.selected;
    nlohmann::json stops = nlohmann::json::object();
    for (const auto& [vid, g] : d.stops) stops[std::to_string(vid)] = g;
    j["stops"] = std::move(stops);
    return j.dump(2);
}

Decision decision_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("decision parse error: ") + e.what());
    }
    Decision d;
    d.selected = j.at("selected").get<std::vector<int>>();
    for (const auto& [key, value] : j.at("stops").items())
        d.stops.emplace(std::stoi(key), value.get<std::vector<int>>());
    return d;
}

std::string selection_to_json_text(const Selection& sel) {
    nlohmann::json j;
    j["selected"] = sel.decision.selected;
    nlohmann::json stops = nlohmann::json::object();
    for (const auto& [vid, g] : sel.decision.stops) stops[std::to_string(vid)] = g;
    j["stops"] = std::move(stops);
    j["d_dagger"] = sel.d_dagger;
    j["iters_used"] = sel.iters_used;
    j["breakdown"] = nlohmann::json::parse(breakdown_to_json_text(sel.breakdown));
    nlohmann::json swaps = nlohmann::json::array();
    for (const auto& sw : sel.swap_log)
        swaps.push_back({{"removed", sw.removed}, {"inserted", sw.inserted}, {"omega", sw.new_omega}});
    j["swap_log"] = std::move(swaps);
    return j.dump(2) + "\n";
}

}  // namespace sense4fl
