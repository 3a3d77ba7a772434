#include "sense4fl/objective.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace sense4fl {

const std::vector<int>& Decision::stops_for(int vehicle_id) const {
    auto it = stops.find(vehicle_id);
    if (it == stops.end())
        throw ValidationError("decision has no stops for vehicle " + std::to_string(vehicle_id));
    return it->second;
}

double delta(int local_steps, double lr, double lipschitz) {
    if (local_steps < 1) throw std::invalid_argument("delta: local_steps must be >= 1");
    const double base = 1.0 + lr * lipschitz;
    double sum = 0.0, term = 1.0;
    for (int j = 1; j < local_steps; ++j) {
        term *= base;
        sum += term;
    }
    return sum;
}

namespace {

void check_stops(const Scenario& s, int vehicle_id, const std::vector<int>& stops) {
    const auto& v = s.vehicle(vehicle_id);
    if (stops.size() != v.trajectories.size())
        throw ValidationError("vehicle " + std::to_string(vehicle_id) + ": expected " +
                              std::to_string(v.trajectories.size()) + " stop values, got " +
                              std::to_string(stops.size()));
    for (std::size_t m = 0; m < stops.size(); ++m) {
        const auto& t = v.trajectories[m];
        if (stops[m] < t.collected_count || stops[m] > t.length())
            throw ValidationError("vehicle " + std::to_string(vehicle_id) + " trajectory " +
                                  std::to_string(m) + ": stop " + std::to_string(stops[m]) +
                                  " outside [" + std::to_string(t.collected_count) + ", " +
                                  std::to_string(t.length()) + "]");
    }
}

}  // namespace

double rho(const Scenario& s, int vehicle_id, const std::vector<int>& stops) {
    check_stops(s, vehicle_id, stops);
    const auto& v = s.vehicle(vehicle_id);
    double r = 0.0;
    for (std::size_t m = 0; m < v.trajectories.size(); ++m) {
        const auto& t = v.trajectories[m];
        double lsum = 0.0;
        for (int n = 0; n < stops[m]; ++n)
            lsum += s.block(t.blocks[static_cast<std::size_t>(n)]).weight;
        r += t.prob * lsum;
    }
    return r;
}

std::vector<double> xi_bar(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                           const TimingMode& mode) {
    check_stops(s, vehicle_id, stops);
    const auto& v = s.vehicle(vehicle_id);
    std::vector<double> w(v.trajectories.size());
    double total = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        const double q_rcv =
            reception_probability(s, vehicle_id, static_cast<int>(m), stops[m], mode).q_rcv;
        w[m] = v.trajectories[m].prob * q_rcv;
        total += w[m];
    }
    if (total <= 0.0)
        throw IneligibleVehicleError("vehicle " + std::to_string(vehicle_id) +
                                     ": all trajectory/reception products are zero");
    for (auto& x : w) x /= total;
    return w;
}

PerVehicleTerms vehicle_terms(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                              const TimingMode& mode) {
    PerVehicleTerms out;
    out.rho = rho(s, vehicle_id, stops);
    out.xi = xi_bar(s, vehicle_id, stops, mode);
    out.mixture.probs.assign(static_cast<std::size_t>(s.num_classes()), 0.0);
    const ClassDistribution target = target_distribution(s);
    for (std::size_t m = 0; m < out.xi.size(); ++m) {
        if (out.xi[m] == 0.0) continue;
        const ClassDistribution p =
            collected_distribution(s, vehicle_id, static_cast<int>(m), stops[m]);
        out.d_client += out.xi[m] * emd(p, target);
        for (std::size_t i = 0; i < p.size(); ++i) out.mixture.probs[i] += out.xi[m] * p.probs[i];
    }
    return out;
}

double client_divergence(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                         const TimingMode& mode) {
    return vehicle_terms(s, vehicle_id, stops, mode).d_client;
}

double global_divergence(const Scenario& s, const Decision& d, const TimingMode& mode) {
    return omega(s, d, mode).d_global;
}

DivergenceBreakdown omega(const Scenario& s, const Decision& d, const TimingMode& mode) {
    if (d.selected.empty()) throw ValidationError("decision selects no vehicles");

    DivergenceBreakdown out;
    out.delta = delta(s);

    double rho_sum = 0.0;
    double rho_dclient = 0.0;
    ClassDistribution mixture;
    mixture.probs.assign(static_cast<std::size_t>(s.num_classes()), 0.0);
    for (int vid : d.selected) {
        PerVehicleTerms terms = vehicle_terms(s, vid, d.stops_for(vid), mode);
        rho_sum += terms.rho;
        rho_dclient += terms.rho * terms.d_client;
        for (std::size_t i = 0; i < mixture.size(); ++i)
            mixture.probs[i] += terms.rho * terms.mixture.probs[i];
        out.per_vehicle.emplace(vid, std::move(terms));
    }
    if (rho_sum <= 0.0) {
        // aggregation weights all zero: Eq-style aggregation undefined
        out.d_client = std::numeric_limits<double>::infinity();
        out.d_global = std::numeric_limits<double>::infinity();
        out.omega = std::numeric_limits<double>::infinity();
        return out;
    }
    for (auto& p : mixture.probs) p /= rho_sum;
    out.d_client = rho_dclient / rho_sum;
    out.d_global = emd(mixture, target_distribution(s));
    out.omega = out.delta * out.d_client + out.d_global;
    return out;
}

std::vector<int> eligible_vehicles(const Scenario& s, const TimingMode& mode) {
    std::vector<int> out;
    for (const auto& v : s.vehicles) {
        std::vector<int> min_stops;
        min_stops.reserve(v.trajectories.size());
        for (const auto& t : v.trajectories) min_stops.push_back(t.collected_count);
        try {
            xi_bar(s, v.id, min_stops, mode);
            out.push_back(v.id);
        } catch (const IneligibleVehicleError&) {
        }
    }
    return out;
}

BoundResult convergence_bound(const std::vector<double>& omega_per_round,
                              const BoundParams& params, const TimingParams& timing,
                              const LearningParams& learning) {
    double omega_sum = 0.0;
    for (double w : omega_per_round) omega_sum += w;
    const double eta = learning.lr;
    const double denom =
        params.init_distance * params.rounds * timing.local_steps *
            (1.0 - params.smoothness * eta / 2.0) -
        params.loss_lipschitz / (params.loss_gap * params.loss_gap) * params.max_gradient *
            omega_sum;
    BoundResult r;
    if (denom <= 0.0) return r;
    r.feasible = true;
    r.value = 1.0 / (eta * denom);
    return r;
}

std::string breakdown_to_json_text(const DivergenceBreakdown& b) {
    nlohmann::json j;
    j["d_client"] = b.d_client;
    j["d_global"] = b.d_global;
    j["delta"] = b.delta;
    j["omega"] = b.omega;
    nlohmann::json pv = nlohmann::json::object();
    for (const auto& [vid, terms] : b.per_vehicle) {
        pv[std::to_string(vid)] = {{"rho", terms.rho},
                                   {"d_client", terms.d_client},
                                   {"xi_bar", terms.xi},
                                   {"mixture", terms.mixture.probs}};
    }
    j["per_vehicle"] = std::move(pv);
    return j.dump(2);
}

}  // namespace sense4fl
