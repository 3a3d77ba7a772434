#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sense4fl/objective.hpp"

namespace sense4fl {

struct InfeasibleScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
    double bisection_tol = 1e-6;      // sigma
    int max_local_search_iters = 50;  // N_max
    TimingMode mode;
    bool parallel_swaps = true;  // OpenMP over swap candidates; result is identical either way
};

struct SwapEntry {
    int removed = 0;
    int inserted = 0;
    double new_omega = 0.0;
};

struct Selection {
    Decision decision;
    DivergenceBreakdown breakdown;
    double d_dagger = 0.0;  // step-1 optimum of the fractional client subproblem
    int iters_used = 0;
    std::vector<SwapEntry> swap_log;
};

// Precomputed per-vehicle evaluation table: every feasible stop vector with
// its aggregation weight, client divergence and trajectory mixture. `exact`
// is false when the stop-vector product exceeded the enumeration cap and only
// per-trajectory marginals are stored for coordinate descent.
struct StopEval {
    std::vector<int> stops;
    double rho = 0.0;
    double d_client = 0.0;
    ClassDistribution mixture;
};

struct VehicleTable {
    int vid = 0;
    bool exact = true;
    std::vector<StopEval> evals;  // exact mode: all feasible stop vectors
    // per-trajectory marginals, indexed [m][g - c_m]
    std::vector<std::vector<double>> weight;   // q_{v,m} * q_rcv
    std::vector<std::vector<double>> lsum;     // sum of block weights over first g
    std::vector<std::vector<double>> emd_mg;   // emd(collected dist, target)
    std::vector<std::vector<ClassDistribution>> dist_mg;
    std::vector<double> traj_prob;
    std::vector<int> first;  // minimal stop (collected_count) per trajectory

    int first_stop(std::size_t m) const { return first[m]; }
    StopEval evaluate(const std::vector<int>& stops) const;
};

// Joint stop-vector products up to this size are enumerated exactly;
// larger vehicles fall back to coordinate descent.
constexpr int kExactEnumerationCap = 256;
constexpr int kCoordinateDescentSweeps = 5;

VehicleTable build_vehicle_table(const Scenario& s, int vehicle_id, const TimingMode& mode);

// Algorithm-1 line-5 subroutine: stops minimizing rho * (delta * d~ - d).
// Exhaustive over the table when exact, coordinate descent to a fixed point
// otherwise. Returns the minimizing evaluation and the metric value.
std::pair<StopEval, double> optimize_g_for_metric(const VehicleTable& table, double delta_eff,
                                                  double d);

struct Step1Result {
    double d_dagger = 0.0;
    std::vector<int> selected;  // vehicle ids, scenario order
    std::unordered_map<int, std::vector<int>> stops;
    double achieved = 0.0;  // fractional objective value of the returned selection
};

// Bisection over d in [0, 2*delta_eff] on the separable client-divergence
// subproblem. delta_eff substitutes 1 for delta when T = 1 (delta = 0), where
// the d-range would collapse.
Step1Result step1_bisection(const Scenario& s, const std::vector<VehicleTable>& tables, int budget,
                            double delta_eff, double tol);

Selection step2_local_search(const Scenario& s, const std::vector<VehicleTable>& tables,
                             Selection initial, const OptimizerConfig& config);

Selection solve(const Scenario& s, const OptimizerConfig& config = {});

enum class OracleObjective { Full, ClientOnly };

struct OracleResult {
    double objective = 0.0;
    Decision decision;
    long combinations = 0;
};

// Exhaustive minimizer over all S-subsets of eligible vehicles and all joint
// stop vectors. Guarded at 1e7 combinations. ClientOnly evaluates the
// fractional step-1 objective delta * sum(rho d~) / sum(rho).
OracleResult brute_force(const Scenario& s, const TimingMode& mode,
                         OracleObjective objective = OracleObjective::Full,
                         long max_combinations = 10000000L);

std::string selection_to_json_text(const Selection& sel);
std::string decision_to_json_text(const Decision& d);
Decision decision_from_json_text(const std::string& text);

}  // namespace sense4fl
