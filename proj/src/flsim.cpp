#include "sense4fl/flsim.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "sense4fl/baselines.hpp"
#include "sense4fl/divergence.hpp"
#include "sense4fl/timing.hpp"

namespace sense4fl {

Strategy strategy_from_name(const std::string& name) {
    for (Strategy s : all_strategies())
        if (strategy_name(s) == name) return s;
    throw ValidationError("unknown strategy \"" + name + "\"");
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Sense4fl: return "sense4fl";
        case Strategy::Random: return "random";
        case Strategy::UploadingCentric: return "uploading";
        case Strategy::CoverageCentric: return "coverage";
        case Strategy::GradientBased: return "gradient";
        case Strategy::PowerOfChoice: return "power_of_choice";
        case Strategy::FullData: return "full_data";
        case Strategy::SelectionOnly: return "selection_only";
        case Strategy::Centralized: return "centralized";
    }
    return "?";
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = {
        Strategy::Sense4fl,      Strategy::Random,        Strategy::UploadingCentric,
        Strategy::CoverageCentric, Strategy::GradientBased, Strategy::PowerOfChoice,
        Strategy::FullData,      Strategy::SelectionOnly, Strategy::Centralized};
    return all;
}

namespace {

Sample draw_class_sample(int label, const std::vector<std::vector<double>>& class_means,
                         double noise_std, Xoshiro256pp& rng) {
    Sample s;
    s.y = label;
    const auto& mean = class_means[static_cast<std::size_t>(label)];
    s.x.resize(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) s.x[j] = rng.normal(mean[j], noise_std);
    return s;
}

}  // namespace

SynthData synthesize_block_data(const Scenario& s, const SimConfig& cfg, std::uint64_t seed) {
    Xoshiro256pp rng(derive_seed(seed, 0x64617461ULL));
    const int C = s.num_classes();

    SynthData out;
    out.class_means.resize(static_cast<std::size_t>(C));
    for (auto& mean : out.class_means) {
        mean.resize(static_cast<std::size_t>(cfg.feature_dim));
        for (auto& m : mean) m = rng.normal(0.0, cfg.class_mean_scale);
    }

    out.block_pools.resize(static_cast<std::size_t>(s.num_blocks()));
    for (int b = 0; b < s.num_blocks(); ++b) {
        auto& pool = out.block_pools[static_cast<std::size_t>(b)];
        pool.reserve(static_cast<std::size_t>(cfg.pool_size));
        const auto& probs = s.blocks[static_cast<std::size_t>(b)].class_dist.probs;
        for (int i = 0; i < cfg.pool_size; ++i)
            pool.push_back(
                draw_class_sample(rng.categorical(probs), out.class_means, cfg.noise_std, rng));
    }

    const ClassDistribution target = target_distribution(s);
    out.test_set.reserve(static_cast<std::size_t>(cfg.eval_size));
    for (int i = 0; i < cfg.eval_size; ++i)
        out.test_set.push_back(
            draw_class_sample(rng.categorical(target.probs), out.class_means, cfg.noise_std, rng));
    return out;
}

namespace {

std::vector<double> softmax_probs(const ToyModel& m, const Sample& s) {
    std::vector<double> z(static_cast<std::size_t>(m.classes));
    double zmax = -1e300;
    for (int c = 0; c < m.classes; ++c) {
        double v = m.at(c, m.dim);  // bias
        for (int j = 0; j < m.dim; ++j) v += m.at(c, j) * s.x[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(c)] = v;
        zmax = std::max(zmax, v);
    }
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

}  // namespace

double model_loss(const ToyModel& m, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("model_loss: empty dataset");
    double loss = 0.0;
    for (const auto& s : data) {
        const auto p = softmax_probs(m, s);
        loss += -std::log(std::max(p[static_cast<std::size_t>(s.y)], 1e-300));
    }
    return loss / static_cast<double>(data.size());
}

double model_accuracy(const ToyModel& m, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("model_accuracy: empty dataset");
    int correct = 0;
    for (const auto& s : data) {
        const auto p = softmax_probs(m, s);
        const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        if (pred == s.y) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<double> ce_gradient(const ToyModel& m, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("ce_gradient: empty dataset");
    std::vector<double> grad(m.w.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(data.size());
    for (const auto& s : data) {
        const auto p = softmax_probs(m, s);
        for (int c = 0; c < m.classes; ++c) {
            const double err = (p[static_cast<std::size_t>(c)] - (c == s.y ? 1.0 : 0.0)) * inv;
            const std::size_t row =
                static_cast<std::size_t>(c) * (static_cast<std::size_t>(m.dim) + 1);
            for (int j = 0; j < m.dim; ++j)
                grad[row + static_cast<std::size_t>(j)] += err * s.x[static_cast<std::size_t>(j)];
            grad[row + static_cast<std::size_t>(m.dim)] += err;  // bias
        }
    }
    return grad;
}

ToyModel local_sgd(ToyModel model, const Dataset& data, int steps, double lr, int batch_size,
                   std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("local_sgd: empty dataset");
    Xoshiro256pp rng(derive_seed(seed, 0x736764ULL));
    Dataset batch;
    for (int t = 0; t < steps; ++t) {
        batch.clear();
        for (int i = 0; i < batch_size; ++i)
            batch.push_back(data[rng.uniform_int(data.size())]);
        const auto grad = ce_gradient(model, batch);
        for (std::size_t k = 0; k < model.w.size(); ++k) model.w[k] -= lr * grad[k];
    }
    return model;
}

RoundRealization realize_round(const Scenario& s, const Decision& d, const SynthData& synth,
                               const SimConfig& cfg, std::uint64_t seed) {
    RoundRealization out;
    std::vector<int> order = d.selected;
    std::sort(order.begin(), order.end());
    for (int vid : order) {
        Xoshiro256pp rng(derive_seed(seed, 0x726c7a45ULL, static_cast<std::uint64_t>(vid)));
        const auto& v = s.vehicle(vid);
        VehicleRealization r;
        r.vehicle_id = vid;
        std::vector<double> q;
        for (const auto& t : v.trajectories) q.push_back(t.prob);
        r.trajectory = rng.categorical(q);
        r.stop = d.stops_for(vid)[static_cast<std::size_t>(r.trajectory)];
        const auto& traj = v.trajectories[static_cast<std::size_t>(r.trajectory)];
        for (int n = 0; n < r.stop; ++n) {
            const int bidx = s.block_index(traj.blocks[static_cast<std::size_t>(n)]);
            const auto& pool = synth.block_pools[static_cast<std::size_t>(bidx)];
            const int count = rng.poisson(s.blocks[static_cast<std::size_t>(bidx)].avg_objects);
            for (int i = 0; i < count && !pool.empty(); ++i)
                r.data.push_back(pool[rng.uniform_int(pool.size())]);
        }
        r.q_rcv = reception_probability(s, vid, r.trajectory, r.stop, cfg.mode).q_rcv;
        r.uploaded = !r.data.empty() && rng.uniform() < r.q_rcv;
        out.vehicles.push_back(std::move(r));
    }
    return out;
}

bool aggregate(ToyModel& global, const std::vector<ToyModel>& locals, const Scenario& s,
               const Decision& d, const RoundRealization& realization) {
    std::vector<double> weights;
    std::vector<const ToyModel*> models;
    double wsum = 0.0;
    for (std::size_t i = 0; i < realization.vehicles.size(); ++i) {
        const auto& r = realization.vehicles[i];
        if (!r.uploaded) continue;
        weights.push_back(rho(s, r.vehicle_id, d.stops_for(r.vehicle_id)));
        models.push_back(&locals[i]);
        wsum += weights.back();
    }
    if (models.empty()) return false;
    if (wsum <= 0.0) {
        // all aggregation weights zero; fall back to a plain average
        std::fill(weights.begin(), weights.end(), 1.0);
        wsum = static_cast<double>(weights.size());
    }
    ToyModel next(global.classes, global.dim);
    for (std::size_t k = 0; k < models.size(); ++k) {
        const double w = weights[k] / wsum;
        for (std::size_t j = 0; j < next.w.size(); ++j) next.w[j] += w * models[k]->w[j];
    }
    global = std::move(next);
    return true;
}

namespace {

// Availability churn: keep each vehicle independently; when fewer than the
// budget survive, fall back to the full fleet for that round.
Scenario churn_scenario(const Scenario& s, double keep, Xoshiro256pp& rng) {
    Scenario sub = s;
    std::vector<VehicleProfile> kept;
    for (const auto& v : s.vehicles)
        if (rng.uniform() < keep) kept.push_back(v);
    if (static_cast<int>(kept.size()) < s.budget) return sub;
    sub.vehicles = std::move(kept);
    sub.reindex();
    return sub;
}

// Probe dataset drawn from a vehicle's expected g=c collected mixture; used
// by the loss- and gradient-ranked baselines.
Dataset vehicle_probe(const Scenario& s, int vid, const SynthData& synth, const SimConfig& cfg,
                      Xoshiro256pp& rng) {
    const auto& v = s.vehicle(vid);
    std::vector<ClassDistribution> dists;
    std::vector<double> weights;
    for (std::size_t m = 0; m < v.trajectories.size(); ++m) {
        dists.push_back(collected_distribution(s, vid, static_cast<int>(m),
                                               v.trajectories[m].collected_count));
        weights.push_back(v.trajectories[m].prob);
    }
    const ClassDistribution mixture = mix(dists, weights);
    Dataset probe;
    for (int i = 0; i < cfg.probe_size; ++i)
        probe.push_back(draw_class_sample(rng.categorical(mixture.probs), synth.class_means,
                                          cfg.noise_std, rng));
    return probe;
}

double logged_omega(const Scenario& s, const Decision& d, const TimingMode& mode) {
    const double ceiling = 2.0 * delta(s) + 2.0;
    try {
        const double w = omega(s, d, mode).omega;
        return std::isfinite(w) ? std::min(w, ceiling) : ceiling;
    } catch (const std::exception&) {
        // undefined objective (e.g. no eligible selected vehicle): log the ceiling
        return ceiling;
    }
}

}  // namespace

std::vector<RoundLog> run_training(const Scenario& scenario, Strategy strategy,
                                   const SimConfig& cfg) {
    const SynthData synth = synthesize_block_data(scenario, cfg, derive_seed(cfg.seed, 11));
    const int C = scenario.num_classes();
    ToyModel global(C, cfg.feature_dim);

    // pooled target-distribution dataset for the centralized reference
    Dataset central_pool;
    if (strategy == Strategy::Centralized) {
        Xoshiro256pp rng(derive_seed(cfg.seed, 13));
        const ClassDistribution target = target_distribution(scenario);
        for (int i = 0; i < 4 * cfg.eval_size; ++i)
            central_pool.push_back(draw_class_sample(rng.categorical(target.probs),
                                                     synth.class_means, cfg.noise_std, rng));
    }

    Xoshiro256pp churn_rng(derive_seed(cfg.seed, 17));
    std::optional<Decision> cached;  // static scenario: selection does not change
    std::vector<RoundLog> logs;

    for (int round = 0; round < cfg.rounds; ++round) {
        RoundLog log;
        log.round = round;
        log.strategy = strategy_name(strategy);
        log.seed = cfg.seed;

        if (strategy == Strategy::Centralized) {
            global = local_sgd(std::move(global), central_pool, scenario.timing.local_steps,
                               scenario.learning.lr, scenario.timing.batch_size,
                               derive_seed(cfg.seed, 19, static_cast<std::uint64_t>(round)));
            log.omega = 0.0;
            log.uploads = 0;
            log.test_acc = model_accuracy(global, synth.test_set);
            log.test_loss = model_loss(global, synth.test_set);
            logs.push_back(std::move(log));
            continue;
        }

        const Scenario round_scenario =
            cfg.churn ? churn_scenario(scenario, cfg.churn_keep, churn_rng) : scenario;

        Decision decision;
        const bool cacheable = !cfg.churn && strategy != Strategy::Random &&
                               strategy != Strategy::GradientBased &&
                               strategy != Strategy::PowerOfChoice;
        if (cacheable && cached) {
            decision = *cached;
        } else {
            switch (strategy) {
                case Strategy::Sense4fl:
                    decision = solve(round_scenario, cfg.optimizer).decision;
                    break;
                case Strategy::Random:
                    decision = random_select(round_scenario,
                                             derive_seed(cfg.seed, 23,
                                                         static_cast<std::uint64_t>(round)));
                    break;
                case Strategy::UploadingCentric:
                    decision = uploading_centric(round_scenario, cfg.mode);
                    break;
                case Strategy::CoverageCentric:
                    decision = coverage_centric(round_scenario);
                    break;
                case Strategy::GradientBased:
                case Strategy::PowerOfChoice: {
                    std::unordered_map<int, double> score;
                    for (const auto& v : round_scenario.vehicles) {
                        Xoshiro256pp rng(derive_seed(cfg.seed, 29,
                                                     static_cast<std::uint64_t>(round),
                                                     static_cast<std::uint64_t>(v.id)));
                        const Dataset probe =
                            vehicle_probe(round_scenario, v.id, synth, cfg, rng);
                        if (strategy == Strategy::PowerOfChoice) {
                            score.emplace(v.id, model_loss(global, probe));
                        } else {
                            const auto g = ce_gradient(global, probe);
                            double norm = 0.0;
                            for (double x : g) norm += x * x;
                            score.emplace(v.id, std::sqrt(norm));
                        }
                    }
                    decision = strategy == Strategy::PowerOfChoice
                                   ? power_of_choice(round_scenario, score)
                                   : gradient_based(round_scenario, score);
                    break;
                }
                case Strategy::FullData:
                    decision = full_data(round_scenario,
                                         solve(round_scenario, cfg.optimizer).decision);
                    break;
                case Strategy::SelectionOnly:
                    decision = selection_only(round_scenario,
                                              solve(round_scenario, cfg.optimizer).decision);
                    break;
                case Strategy::Centralized:
                    break;  // handled above
            }
            if (cacheable) cached = decision;
        }

        const RoundRealization realization = realize_round(
            round_scenario, decision, synth, cfg,
            derive_seed(cfg.seed, 31, static_cast<std::uint64_t>(round)));

        std::vector<ToyModel> locals;
        double loss_sum = 0.0;
        int trained = 0;
        for (const auto& r : realization.vehicles) {
            if (r.data.empty()) {
                locals.push_back(global);
                continue;
            }
            ToyModel local = local_sgd(global, r.data, round_scenario.timing.local_steps,
                                       round_scenario.learning.lr, round_scenario.timing.batch_size,
                                       derive_seed(cfg.seed, 37, static_cast<std::uint64_t>(round),
                                                   static_cast<std::uint64_t>(r.vehicle_id)));
            loss_sum += model_loss(local, r.data);
            ++trained;
            locals.push_back(std::move(local));
        }
        log.mean_local_loss = trained > 0 ? loss_sum / trained : 0.0;

        aggregate(global, locals, round_scenario, decision, realization);
        for (const auto& r : realization.vehicles)
            if (r.uploaded) ++log.uploads;

        log.omega = logged_omega(round_scenario, decision, cfg.mode);
        log.test_acc = model_accuracy(global, synth.test_set);
        log.test_loss = model_loss(global, synth.test_set);
        logs.push_back(std::move(log));
    }
    return logs;
}

std::string round_log_csv_header() { return "round,strategy,seed,omega,uploads,test_acc,test_loss"; }

std::string round_log_csv_row(const RoundLog& log) {
    std::ostringstream os;
    os << log.round << ',' << log.strategy << ',' << log.seed << ',' << log.omega << ','
       << log.uploads << ',' << log.test_acc << ',' << log.test_loss;
    return os.str();
}

}  // namespace sense4fl
