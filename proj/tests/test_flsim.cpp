#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sense4fl/baselines.hpp"
#include "sense4fl/flsim.hpp"

using namespace sense4fl;

namespace {

SimConfig small_cfg(std::uint64_t seed) {
    SimConfig cfg;
    cfg.rounds = 5;
    cfg.feature_dim = 6;
    cfg.eval_size = 400;
    cfg.pool_size = 300;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("strategy names round trip") {
    for (Strategy s : all_strategies()) CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK_THROWS_AS(strategy_from_name("nope"), ValidationError);
}

TEST_CASE("block pools follow the block class distributions") {
    const Scenario s = generate_synthetic(testutil::small_spec(1));
    SimConfig cfg = small_cfg(1);
    cfg.pool_size = 4000;
    const SynthData synth = synthesize_block_data(s, cfg, 77);
    REQUIRE(static_cast<int>(synth.block_pools.size()) == s.num_blocks());
    for (int b = 0; b < s.num_blocks(); ++b) {
        const auto& pool = synth.block_pools[static_cast<std::size_t>(b)];
        REQUIRE(static_cast<int>(pool.size()) == cfg.pool_size);
        std::vector<int> counts(static_cast<std::size_t>(s.num_classes()), 0);
        for (const auto& sample : pool) ++counts[static_cast<std::size_t>(sample.y)];
        for (int c = 0; c < s.num_classes(); ++c) {
            const double p = s.blocks[static_cast<std::size_t>(b)].class_dist[
                static_cast<std::size_t>(c)];
            const double sigma = std::sqrt(std::max(p * (1 - p) * cfg.pool_size, 1.0));
            CHECK(std::abs(counts[static_cast<std::size_t>(c)] - p * cfg.pool_size) <=
                  4.0 * sigma);
        }
    }
}

TEST_CASE("test set follows the target distribution") {
    const Scenario s = generate_synthetic(testutil::small_spec(2));
    SimConfig cfg = small_cfg(2);
    cfg.eval_size = 6000;
    const SynthData synth = synthesize_block_data(s, cfg, 3);
    const ClassDistribution target = target_distribution(s);
    std::vector<int> counts(static_cast<std::size_t>(s.num_classes()), 0);
    for (const auto& sample : synth.test_set) ++counts[static_cast<std::size_t>(sample.y)];
    for (int c = 0; c < s.num_classes(); ++c) {
        const double p = target[static_cast<std::size_t>(c)];
        const double sigma = std::sqrt(std::max(p * (1 - p) * cfg.eval_size, 1.0));
        CHECK(std::abs(counts[static_cast<std::size_t>(c)] - p * cfg.eval_size) <= 4.0 * sigma);
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    Xoshiro256pp rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int C = 2 + static_cast<int>(rng.uniform_int(3));
        const int dim = 2 + static_cast<int>(rng.uniform_int(4));
        ToyModel m(C, dim);
        for (auto& w : m.w) w = rng.normal(0.0, 0.5);
        Dataset data;
        for (int i = 0; i < 4; ++i) {
            Sample s;
            s.y = static_cast<int>(rng.uniform_int(C));
            for (int j = 0; j < dim; ++j) s.x.push_back(rng.normal(0.0, 2.0));
            data.push_back(std::move(s));
        }
        const auto grad = ce_gradient(m, data);
        const double h = 1e-6;
        for (std::size_t k = 0; k < m.w.size(); ++k) {
            ToyModel plus = m, minus = m;
            plus.w[k] += h;
            minus.w[k] -= h;
            const double fd = (model_loss(plus, data) - model_loss(minus, data)) / (2 * h);
            const double scale = std::max(1.0, std::abs(fd));
            REQUIRE(std::abs(grad[k] - fd) / scale < 1e-5);
        }
    }
}

TEST_CASE("local sgd reduces the training loss") {
    Xoshiro256pp rng(6);
    const int C = 3, dim = 5;
    std::vector<std::vector<double>> means;
    for (int c = 0; c < C; ++c) {
        std::vector<double> mu(dim);
        for (auto& x : mu) x = rng.normal(0.0, 3.0);
        means.push_back(std::move(mu));
    }
    Dataset data;
    for (int i = 0; i < 200; ++i) {
        Sample s;
        s.y = static_cast<int>(rng.uniform_int(C));
        for (int j = 0; j < dim; ++j) s.x.push_back(means[static_cast<std::size_t>(s.y)][
                                                        static_cast<std::size_t>(j)] +
                                                    rng.normal());
        data.push_back(std::move(s));
    }
    ToyModel m(C, dim);
    const double before = model_loss(m, data);
    const ToyModel trained = local_sgd(m, data, 200, 0.05, 32, 9);
    CHECK(model_loss(trained, data) < before);
    CHECK(model_accuracy(trained, data) > 0.6);

    // seeded determinism
    const ToyModel again = local_sgd(m, data, 200, 0.05, 32, 9);
    CHECK(trained.w == again.w);
}

TEST_CASE("realized trajectories and uploads match their probabilities") {
    Scenario s = testutil::tiny_two_trajectory_scenario();
    const SimConfig cfg = small_cfg(3);
    const SynthData synth = synthesize_block_data(s, cfg, 1);
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{2, 1});

    const int draws = 10000;
    int traj0 = 0, uploads = 0;
    for (int i = 0; i < draws; ++i) {
        const auto rr = realize_round(s, d, synth, cfg, derive_seed(99, i));
        REQUIRE(rr.vehicles.size() == 1);
        const auto& r = rr.vehicles.front();
        if (r.trajectory == 0) ++traj0;
        if (r.uploaded) ++uploads;
        CHECK(r.stop == (r.trajectory == 0 ? 2 : 1));
        CHECK_FALSE(r.data.empty());  // Q_b >= 100 makes empty draws essentially impossible
    }
    // trajectory 0 has q = 0.75; both trajectories meet the deadline (q_rcv = 1)
    const double sigma_traj = std::sqrt(0.75 * 0.25 * draws);
    CHECK(std::abs(traj0 - 0.75 * draws) <= 3.0 * sigma_traj);
    CHECK(uploads == draws);
}

TEST_CASE("upload frequency tracks q_rcv under monte carlo timing") {
    Scenario s = testutil::tiny_scenario();
    // truncated-gaussian sojourn wide enough to make success genuinely random
    auto& t = s.vehicles[0].trajectories[0];
    t.sojourn.dist = SojournDist::TruncatedGaussian;
    t.sojourn.mean_s = {30.0, 65.0};
    t.sojourn.std_s = {6.0, 13.0};
    validate_and_normalize(s);

    SimConfig cfg = small_cfg(4);
    cfg.mode = TimingMode::monte_carlo(4000, 11);
    const SynthData synth = synthesize_block_data(s, cfg, 1);
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{2});

    const double q = reception_probability(s, 1, 0, 2, cfg.mode).q_rcv;
    REQUIRE(q > 0.05);
    REQUIRE(q < 0.95);
    const int draws = 4000;
    int uploads = 0;
    for (int i = 0; i < draws; ++i) {
        const auto rr = realize_round(s, d, synth, cfg, derive_seed(7, i));
        if (rr.vehicles.front().uploaded) ++uploads;
    }
    const double sigma = std::sqrt(q * (1 - q) * draws);
    CHECK(std::abs(uploads - q * draws) <= 3.5 * sigma);
}

TEST_CASE("aggregate weights by rho over successful uploads only") {
    const Scenario s = testutil::tiny_scenario();
    ToyModel global(2, 3);
    ToyModel a(2, 3), b(2, 3);
    for (auto& w : a.w) w = 1.0;
    for (auto& w : b.w) w = 3.0;

    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{2});

    RoundRealization rr;
    VehicleRealization va;
    va.vehicle_id = 1;
    va.uploaded = false;
    rr.vehicles.push_back(va);
    CHECK_FALSE(aggregate(global, {a}, s, d, rr));
    for (double w : global.w) CHECK(w == 0.0);  // untouched

    rr.vehicles.front().uploaded = true;
    REQUIRE(aggregate(global, {a}, s, d, rr));
    for (double w : global.w) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_training logs are deterministic and csv-complete") {
    const Scenario s = generate_synthetic(testutil::small_spec(5));
    const SimConfig cfg = small_cfg(6);
    const auto a = run_training(s, Strategy::Random, cfg);
    const auto b = run_training(s, Strategy::Random, cfg);
    REQUIRE(static_cast<int>(a.size()) == cfg.rounds);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].test_acc == b[i].test_acc);
        CHECK(a[i].omega == b[i].omega);
        CHECK(a[i].uploads == b[i].uploads);
        CHECK(a[i].round == static_cast<int>(i));
        CHECK(a[i].strategy == "random");
    }
    CHECK(round_log_csv_header() == "round,strategy,seed,omega,uploads,test_acc,test_loss");
    const std::string row = round_log_csv_row(a.front());
    CHECK(std::count(row.begin(), row.end(), ',') == 6);
}

TEST_CASE("every strategy runs end to end") {
    GeneratorSpec g = testutil::small_spec(6);
    g.deadline_s = 200.0;
    const Scenario s = generate_synthetic(g);
    SimConfig cfg = small_cfg(7);
    cfg.rounds = 3;
    for (Strategy strategy : all_strategies()) {
        const auto logs = run_training(s, strategy, cfg);
        REQUIRE(static_cast<int>(logs.size()) == cfg.rounds);
        for (const auto& log : logs) {
            CHECK(std::isfinite(log.test_loss));
            CHECK(log.test_acc >= 0.0);
            CHECK(log.test_acc <= 1.0);
            CHECK(log.omega >= 0.0);
            CHECK(log.omega <= 2.0 * delta(s) + 2.0);
        }
    }
}

TEST_CASE("centralized training learns the target task") {
    const Scenario s = generate_synthetic(testutil::small_spec(7));
    SimConfig cfg = small_cfg(8);
    cfg.rounds = 40;
    const auto logs = run_training(s, Strategy::Centralized, cfg);
    CHECK(logs.back().test_acc > logs.front().test_acc);
    CHECK(logs.back().omega == 0.0);
}

TEST_CASE("churn keeps runs valid") {
    GeneratorSpec g = testutil::small_spec(8);
    g.num_vehicles = 10;
    g.budget = 3;
    const Scenario s = generate_synthetic(g);
    SimConfig cfg = small_cfg(9);
    cfg.churn = true;
    cfg.rounds = 4;
    const auto logs = run_training(s, Strategy::Sense4fl, cfg);
    REQUIRE(static_cast<int>(logs.size()) == cfg.rounds);
}
