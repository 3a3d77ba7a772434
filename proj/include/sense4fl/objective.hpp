#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "sense4fl/divergence.hpp"
#include "sense4fl/scenario.hpp"
#include "sense4fl/timing.hpp"

namespace sense4fl {

// Signalled when a vehicle has q_{v,m} * q_rcv = 0 on every trajectory; its
// trajectory mixing weights are undefined and it must be excluded from
// selection.
struct IneligibleVehicleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A candidate solution: which vehicles train, and where each trajectory stops
// collecting.
struct Decision {
    std::vector<int> selected;                           // vehicle ids
    std::unordered_map<int, std::vector<int>> stops;     // vehicle id -> g per trajectory

    const std::vector<int>& stops_for(int vehicle_id) const;
};

struct PerVehicleTerms {
    double rho = 0.0;
    double d_client = 0.0;          // d~_v
    std::vector<double> xi;         // mixing weight per trajectory
    ClassDistribution mixture;      // sum_m xi_m p_{v,m}
};

struct DivergenceBreakdown {
    double d_client = 0.0;  // rho-normalized weighted sum of per-vehicle d~_v
    double d_global = 0.0;
    double delta = 0.0;
    double omega = 0.0;  // delta * d_client + d_global
    std::unordered_map<int, PerVehicleTerms> per_vehicle;
};

// Local-drift amplification factor: sum_{j=1}^{T-1} (1 + eta*lambda_max)^j.
double delta(int local_steps, double lr, double lipschitz);

inline double delta(const Scenario& s) {
    return delta(s.timing.local_steps, s.learning.lr, s.learning.lipschitz);
}

// Aggregation weight: sum_m q_{v,m} * (sum of l_b over the first g_m blocks).
double rho(const Scenario& s, int vehicle_id, const std::vector<int>& stops);

// Normalized q * q_rcv products per trajectory. Throws IneligibleVehicleError
// when all products vanish.
std::vector<double> xi_bar(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                           const TimingMode& mode);

double client_divergence(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                         const TimingMode& mode);

double global_divergence(const Scenario& s, const Decision& d, const TimingMode& mode);

// All per-vehicle terms for one (vehicle, stop vector) pair in one pass.
PerVehicleTerms vehicle_terms(const Scenario& s, int vehicle_id, const std::vector<int>& stops,
                              const TimingMode& mode);

// Full objective breakdown for a decision. When every selected vehicle has
// zero aggregation weight, omega is +infinity (the aggregation rule is
// undefined there, so the optimizer must never return such a decision).
DivergenceBreakdown omega(const Scenario& s, const Decision& d, const TimingMode& mode);

// Vehicle ids (scenario order) that are eligible at their minimal stop
// vector. q_rcv is non-increasing in g, so eligibility at g = c is the
// weakest requirement.
std::vector<int> eligible_vehicles(const Scenario& s, const TimingMode& mode);

struct BoundParams {
    double smoothness = 1.0;      // beta
    double loss_lipschitz = 1.0;  // L
    double loss_gap = 1.0;        // epsilon
    double init_distance = 1.0;   // phi
    double max_gradient = 1.0;    // U
    int rounds = 1;               // K
};

struct BoundResult {
    bool feasible = false;
    double value = std::numeric_limits<double>::infinity();
};

// Training-loss upper bound 1 / (eta*(phi*K*T*(1 - beta*eta/2) - (L/eps^2)*U*sum(omega))).
// A non-positive denominator yields an infeasible result, not an error.
BoundResult convergence_bound(const std::vector<double>& omega_per_round,
                              const BoundParams& params, const TimingParams& timing,
                              const LearningParams& learning);

std::string breakdown_to_json_text(const DivergenceBreakdown& b);

}  // namespace sense4fl
