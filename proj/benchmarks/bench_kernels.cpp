// Compares the serial reference kernels against their OpenMP versions and
// checks they agree bit-for-bit.

#include <chrono>
#include <cstdio>

#include "sense4fl/optimizer.hpp"
#include "sense4fl/scenario.hpp"
#include "sense4fl/timing.hpp"

using namespace sense4fl;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Scenario make_scenario() {
    GeneratorSpec spec;
    spec.num_blocks = 25;
    spec.num_vehicles = 70;
    spec.num_classes = 10;
    spec.max_trajectories = 3;
    spec.max_blocks_per_trajectory = 5;
    spec.budget = 10;
    spec.seed = 7;
    return generate_synthetic(spec);
}

}  // namespace

int main() {
    const Scenario s = make_scenario();
    // longest trajectory in the fleet, so every sample draws real sojourns
    const VehicleProfile* pick = &s.vehicles.front();
    for (const auto& cand : s.vehicles)
        if (cand.trajectories.front().length() > pick->trajectories.front().length()) pick = &cand;
    const auto& v = *pick;
    const int g = v.trajectories.front().length();
    const double fixed = compute_time(s.timing, v) + upload_time(s.timing, v);
    const int samples = 2000000;

    double t0 = now_s();
    const double serial = mc_success_fraction_serial(s, v.id, 0, g, fixed, samples, 42);
    const double t_serial = now_s() - t0;

    t0 = now_s();
    const double parallel = mc_success_fraction_parallel(s, v.id, 0, g, fixed, samples, 42);
    const double t_parallel = now_s() - t0;

    std::printf("mc_success_fraction  %d samples\n", samples);
    std::printf("  serial    %.3fs  q_rcv=%.8f\n", t_serial, serial);
    std::printf("  parallel  %.3fs  q_rcv=%.8f  speedup=%.2fx  identical=%s\n", t_parallel,
                parallel, t_serial / t_parallel, serial == parallel ? "yes" : "NO");

    OptimizerConfig cfg;
    cfg.parallel_swaps = false;
    t0 = now_s();
    const Selection sel_serial = solve(s, cfg);
    const double t_solve_serial = now_s() - t0;

    cfg.parallel_swaps = true;
    t0 = now_s();
    const Selection sel_parallel = solve(s, cfg);
    const double t_solve_parallel = now_s() - t0;

    std::printf("local-search swap evaluation  V=%d S=%d\n", s.num_vehicles(), s.budget);
    std::printf("  serial    %.3fs  omega=%.8f\n", t_solve_serial, sel_serial.breakdown.omega);
    std::printf("  parallel  %.3fs  omega=%.8f  speedup=%.2fx  identical=%s\n", t_solve_parallel,
                sel_parallel.breakdown.omega, t_solve_serial / t_solve_parallel,
                sel_serial.breakdown.omega == sel_parallel.breakdown.omega ? "yes" : "NO");

    const bool ok = serial == parallel &&
                    sel_serial.breakdown.omega == sel_parallel.breakdown.omega;
    return ok ? 0 : 1;
}
