#include "sense4fl/timing.hpp"

#include <algorithm>
#include <stdexcept>

#include "sense4fl/rng.hpp"

namespace sense4fl {

namespace {

const Trajectory& get_trajectory(const Scenario& s, int vehicle_id, int trajectory) {
    const auto& v = s.vehicle(vehicle_id);
    if (trajectory < 0 || trajectory >= static_cast<int>(v.trajectories.size()))
        throw std::out_of_range("trajectory index " + std::to_string(trajectory) +
                                " out of range for vehicle " + std::to_string(vehicle_id));
    return v.trajectories[static_cast<std::size_t>(trajectory)];
}

void check_stop(const Trajectory& t, int stop) {
    if (stop < t.collected_count || stop > t.length())
        throw std::out_of_range("stop " + std::to_string(stop) + " outside [" +
                                std::to_string(t.collected_count) + ", " +
                                std::to_string(t.length()) + "]");
}

constexpr int kBatchSize = 1024;

}  // namespace

double sample_sojourn(const SojournModel& m, int block_pos, Xoshiro256pp& rng) {
    const double mean = m.mean_s[static_cast<std::size_t>(block_pos)];
    const double std = m.std_s[static_cast<std::size_t>(block_pos)];
    if (m.dist == SojournDist::Deterministic || std == 0.0) return mean;
    // rejection keeps the draw inside [0, 2*mean]; acceptance >= 0.95 for std <= mean/2
    for (;;) {
        const double x = rng.normal(mean, std);
        if (x >= 0.0 && x <= 2.0 * mean) return x;
    }
}

double data_collection_time(const Scenario& s, int vehicle_id, int trajectory, int stop) {
    const auto& t = get_trajectory(s, vehicle_id, trajectory);
    check_stop(t, stop);
    double total = 0.0;
    for (int n = t.collected_count; n < stop; ++n)
        total += t.sojourn.mean_s[static_cast<std::size_t>(n)];
    return total;
}

double compute_time(const TimingParams& timing, const VehicleProfile& v) {
    return timing.local_steps * v.cycles_per_sample * timing.batch_size / v.flops;
}

double upload_time(const TimingParams& timing, const VehicleProfile& v) {
    return timing.model_bits / v.min_rate_bps + timing.wired_delay_s;
}

namespace {

// Per-batch success count. Each batch has its own generator seeded from
// stream_seed ^ batch index, making the sample partition (and hence the
// estimate) independent of the execution order.
int mc_batch_successes(const Trajectory& t, int stop, double fixed_s, double deadline_s,
                       int batch, int count, std::uint64_t stream_seed) {
    Xoshiro256pp rng(derive_seed(stream_seed ^ static_cast<std::uint64_t>(batch), 0x6d63ULL));
    int ok = 0;
    for (int i = 0; i < count; ++i) {
        double dct = 0.0;
        for (int n = t.collected_count; n < stop; ++n) dct += sample_sojourn(t.sojourn, n, rng);
        if (dct + fixed_s <= deadline_s) ++ok;
    }
    return ok;
}

}  // namespace

double mc_success_fraction_serial(const Scenario& s, int vehicle_id, int trajectory, int stop,
                                  double fixed_s, int samples, std::uint64_t stream_seed) {
    const auto& t = get_trajectory(s, vehicle_id, trajectory);
    check_stop(t, stop);
    const int batches = (samples + kBatchSize - 1) / kBatchSize;
    long total_ok = 0;
    for (int b = 0; b < batches; ++b) {
        const int count = std::min(kBatchSize, samples - b * kBatchSize);
        total_ok += mc_batch_successes(t, stop, fixed_s, s.timing.deadline_s, b, count, stream_seed);
    }
    return static_cast<double>(total_ok) / samples;
}

double mc_success_fraction_parallel(const Scenario& s, int vehicle_id, int trajectory, int stop,
                                    double fixed_s, int samples, std::uint64_t stream_seed) {
    const auto& t = get_trajectory(s, vehicle_id, trajectory);
    check_stop(t, stop);
    const int batches = (samples + kBatchSize - 1) / kBatchSize;
    long total_ok = 0;
#pragma omp parallel for reduction(+ : total_ok) schedule(static)
    for (int b = 0; b < batches; ++b) {
        const int count = std::min(kBatchSize, samples - b * kBatchSize);
        total_ok += mc_batch_successes(t, stop, fixed_s, s.timing.deadline_s, b, count, stream_seed);
    }
    return static_cast<double>(total_ok) / samples;
}

ReceptionEstimate reception_probability(const Scenario& s, int vehicle_id, int trajectory,
                                        int stop, const TimingMode& mode) {
    const auto& v = s.vehicle(vehicle_id);
    if (mode.kind == TimingMode::MonteCarlo && mode.samples < 1)
        throw std::invalid_argument("reception_probability: samples must be >= 1");

    ReceptionEstimate est;
    est.dct_s = data_collection_time(s, vehicle_id, trajectory, stop);
    est.comp_s = compute_time(s.timing, v);
    est.up_s = upload_time(s.timing, v);
    est.mean_total_s = est.dct_s + est.comp_s + est.up_s;

    if (mode.kind == TimingMode::Deterministic) {
        est.q_rcv = est.mean_total_s <= s.timing.deadline_s ? 1.0 : 0.0;
        return est;
    }
    const std::uint64_t stream = derive_seed(mode.seed, static_cast<std::uint64_t>(vehicle_id),
                                             static_cast<std::uint64_t>(trajectory),
                                             static_cast<std::uint64_t>(stop));
    const double fixed = est.comp_s + est.up_s;
    est.q_rcv = mode.parallel
                    ? mc_success_fraction_parallel(s, vehicle_id, trajectory, stop, fixed,
                                                   mode.samples, stream)
                    : mc_success_fraction_serial(s, vehicle_id, trajectory, stop, fixed,
                                                 mode.samples, stream);
    return est;
}

}  // namespace sense4fl
