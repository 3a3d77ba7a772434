#pragma once

#include <cstdint>

#include "sense4fl/scenario.hpp"

namespace sense4fl {

// How reception probabilities are evaluated. Deterministic mode compares the
// mean-sojourn total against the deadline; Monte Carlo mode estimates
// P(total <= deadline) over truncated-Gaussian sojourn draws.
struct TimingMode {
    enum Kind { Deterministic, MonteCarlo } kind = Deterministic;
    int samples = 10000;
    std::uint64_t seed = 0;
    bool parallel = true;  // OpenMP over sample batches; result is identical either way

    static TimingMode deterministic() { return {}; }
    static TimingMode monte_carlo(int samples = 10000, std::uint64_t seed = 0) {
        return {MonteCarlo, samples, seed, true};
    }
};

struct ReceptionEstimate {
    double q_rcv = 0.0;
    double mean_total_s = 0.0;
    double dct_s = 0.0;
    double comp_s = 0.0;
    double up_s = 0.0;
};

// Expected data collection time over blocks c+1..stop using mean sojourns.
double data_collection_time(const Scenario& s, int vehicle_id, int trajectory, int stop);

// T * c_v * D_batch / f_v
double compute_time(const TimingParams& timing, const VehicleProfile& v);

// omega / R_min + t_trans
double upload_time(const TimingParams& timing, const VehicleProfile& v);

ReceptionEstimate reception_probability(const Scenario& s, int vehicle_id, int trajectory,
                                        int stop, const TimingMode& mode);

// Monte Carlo success-fraction kernels, exposed for the benchmark target.
// Samples are drawn in fixed-size batches with per-batch derived seeds
// (stream_seed xor batch index), so the serial and OpenMP versions produce
// bit-identical estimates.
double mc_success_fraction_serial(const Scenario& s, int vehicle_id, int trajectory, int stop,
                                  double fixed_s, int samples, std::uint64_t stream_seed);
double mc_success_fraction_parallel(const Scenario& s, int vehicle_id, int trajectory, int stop,
                                    double fixed_s, int samples, std::uint64_t stream_seed);

// One truncated-Gaussian sojourn draw, clipped to [0, 2*mean] by rejection.
class Xoshiro256pp;
double sample_sojourn(const SojournModel& m, int block_pos, Xoshiro256pp& rng);

}  // namespace sense4fl
