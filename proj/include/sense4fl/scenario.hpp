#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sense4fl {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Normalized per-class probability vector; the unit of all divergence math.
struct ClassDistribution {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }
};

enum class SojournDist { Deterministic, TruncatedGaussian };

// Per-block sojourn time parameters along one trajectory. Truncated Gaussian
// draws are clipped to [0, 2*mean] so the expectation stays close to the mean.
struct SojournModel {
    std::vector<double> mean_s;
    std::vector<double> std_s;
    SojournDist dist = SojournDist::Deterministic;
};

struct Trajectory {
    std::vector<int> blocks;  // ordered block ids, length N >= 1
    double prob = 0.0;        // q_{v,m}
    int collected_count = 1;  // blocks already traversed at selection time
    SojournModel sojourn;

    int length() const { return static_cast<int>(blocks.size()); }
};

struct VehicleProfile {
    int id = 0;
    double flops = 0.0;              // f_v
    double cycles_per_sample = 0.0;  // c_v
    double min_rate_bps = 0.0;       // R_min
    std::vector<Trajectory> trajectories;
};

struct StreetBlock {
    int id = 0;
    double avg_objects = 0.0;  // Q_b
    ClassDistribution class_dist;
    double weight = 0.0;  // l_b, sums to 1 across the scenario
};

struct TimingParams {
    double deadline_s = 80.0;       // T_task
    double model_bits = 5.904e8;    // omega
    double wired_delay_s = 1.0;     // t_trans
    int batch_size = 32;            // D_batch
    int local_steps = 2;            // T
};

struct LearningParams {
    double lr = 0.001;       // eta
    double lipschitz = 0.01;  // lambda_max
};

struct Scenario {
    std::vector<StreetBlock> blocks;
    std::vector<VehicleProfile> vehicles;
    TimingParams timing;
    LearningParams learning;
    int budget = 1;  // S, number of vehicles to select

    int num_classes() const {
        return blocks.empty() ? 0 : static_cast<int>(blocks.front().class_dist.size());
    }
    int num_blocks() const { return static_cast<int>(blocks.size()); }
    int num_vehicles() const { return static_cast<int>(vehicles.size()); }

    const StreetBlock& block(int id) const;
    const VehicleProfile& vehicle(int id) const;
    int block_index(int id) const;
    int vehicle_index(int id) const;

    // Rebuild the id lookup tables; called by loaders and the generator.
    void reindex();

  private:
    std::unordered_map<int, int> block_idx_;
    std::unordered_map<int, int> vehicle_idx_;
};

// Checks every invariant and renormalizes probability vectors exactly once.
// Throws ValidationError naming the first violated invariant.
void validate_and_normalize(Scenario& s);

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

struct GeneratorSpec {
    int num_blocks = 4;
    int num_vehicles = 3;
    int num_classes = 3;
    int max_trajectories = 2;  // M_max
    int max_blocks_per_trajectory = 3;  // N_max
    int budget = 2;  // S
    std::uint64_t seed = 0;
    double dirichlet_alpha = 0.3;  // non-IID strength; higher = closer to IID
    bool iid = false;              // all blocks share one class distribution
    double deadline_s = 80.0;
    double sojourn_mean_lo = 20.0;
    double sojourn_mean_hi = 40.0;
};

// Deterministic synthetic scenario: Dirichlet block distributions, random-walk
// trajectories over a grid adjacency, Table-II-style timing defaults.
Scenario generate_synthetic(const GeneratorSpec& spec);

}  // namespace sense4fl
