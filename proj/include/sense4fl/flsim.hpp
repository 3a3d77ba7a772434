#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sense4fl/objective.hpp"
#include "sense4fl/optimizer.hpp"
#include "sense4fl/rng.hpp"

namespace sense4fl {

// Multinomial logistic regression with bias; the desk-scale stand-in for the
// perception model. Weights are row-major C x (dim + 1).
struct ToyModel {
    int classes = 0;
    int dim = 0;
    std::vector<double> w;

    ToyModel() = default;
    ToyModel(int classes_, int dim_)
        : classes(classes_), dim(dim_),
          w(static_cast<std::size_t>(classes_) * (static_cast<std::size_t>(dim_) + 1), 0.0) {}

    double& at(int c, int j) {
        return w[static_cast<std::size_t>(c) * (static_cast<std::size_t>(dim) + 1) +
                 static_cast<std::size_t>(j)];
    }
    double at(int c, int j) const {
        return w[static_cast<std::size_t>(c) * (static_cast<std::size_t>(dim) + 1) +
                 static_cast<std::size_t>(j)];
    }
};

struct Sample {
    std::vector<double> x;
    int y = 0;
};

using Dataset = std::vector<Sample>;

enum class Strategy {
    Sense4fl,
    Random,
    UploadingCentric,
    CoverageCentric,
    GradientBased,
    PowerOfChoice,
    FullData,
    SelectionOnly,
    Centralized,
};

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);
const std::vector<Strategy>& all_strategies();

struct SimConfig {
    int rounds = 50;
    int feature_dim = 16;
    double noise_std = 1.0;
    double class_mean_scale = 3.0;  // spread of class-conditional feature means
    int eval_size = 2000;
    int pool_size = 1000;  // per-block sample pool
    int probe_size = 64;   // per-vehicle probe for loss/gradient ranking
    std::uint64_t seed = 0;
    TimingMode mode;  // reception evaluation during selection and realization
    OptimizerConfig optimizer;
    bool churn = false;        // resample available vehicles each round
    double churn_keep = 0.8;   // per-vehicle availability probability when churn is on
};

// Per-block sample pools, the held-out test set (drawn from the l-weighted
// target distribution) and the shared class-conditional feature means.
struct SynthData {
    std::vector<Dataset> block_pools;  // scenario block order
    Dataset test_set;
    std::vector<std::vector<double>> class_means;
};

SynthData synthesize_block_data(const Scenario& s, const SimConfig& cfg, std::uint64_t seed);

// Mean cross-entropy of the model over a dataset.
double model_loss(const ToyModel& m, const Dataset& data);
double model_accuracy(const ToyModel& m, const Dataset& data);

// Mean softmax cross-entropy gradient over a batch, row-major like ToyModel::w.
std::vector<double> ce_gradient(const ToyModel& m, const Dataset& data);

// T steps of seeded mini-batch SGD; batches drawn with replacement.
ToyModel local_sgd(ToyModel model, const Dataset& data, int steps, double lr, int batch_size,
                   std::uint64_t seed);

struct VehicleRealization {
    int vehicle_id = 0;
    int trajectory = 0;  // realized m
    int stop = 0;
    bool uploaded = false;
    double q_rcv = 0.0;
    Dataset data;
};

struct RoundRealization {
    std::vector<VehicleRealization> vehicles;
};

// Draws each selected vehicle's trajectory, its collected dataset (Poisson(Q_b)
// samples per traversed block) and the upload success indicator.
RoundRealization realize_round(const Scenario& s, const Decision& d, const SynthData& synth,
                               const SimConfig& cfg, std::uint64_t seed);

// Weighted aggregation over successful uploads with weights a_v * rho_v.
// Returns false when no vehicle uploaded; `global` is left untouched then.
bool aggregate(ToyModel& global, const std::vector<ToyModel>& locals, const Scenario& s,
               const Decision& d, const RoundRealization& realization);

struct RoundLog {
    int round = 0;
    std::string strategy;
    std::uint64_t seed = 0;
    double omega = 0.0;
    int uploads = 0;
    double test_acc = 0.0;
    double test_loss = 0.0;
    double mean_local_loss = 0.0;
};

std::vector<RoundLog> run_training(const Scenario& s, Strategy strategy, const SimConfig& cfg);

std::string round_log_csv_header();
std::string round_log_csv_row(const RoundLog& log);

}  // namespace sense4fl
