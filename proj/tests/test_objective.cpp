#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sense4fl/objective.hpp"

using namespace sense4fl;

TEST_CASE("delta hand values at eta=0.001, lambda=0.01") {
    CHECK(delta(1, 0.001, 0.01) == 0.0);
    CHECK(delta(2, 0.001, 0.01) == doctest::Approx(1.00001).epsilon(1e-12));
    // (1+1e-5) + (1+1e-5)^2
    CHECK(delta(3, 0.001, 0.01) == doctest::Approx(2.0000300001).epsilon(1e-12));
    CHECK_THROWS_AS(delta(0, 0.001, 0.01), std::invalid_argument);
}

TEST_CASE("delta grows with each extra local step") {
    double prev = delta(1, 0.01, 0.5);
    for (int t = 2; t <= 8; ++t) {
        const double cur = delta(t, 0.01, 0.5);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("rho is the trajectory-probability-weighted traversed weight") {
    const Scenario s = testutil::tiny_scenario();
    CHECK(rho(s, 1, {1}) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rho(s, 1, {2}) == doctest::Approx(1.0).epsilon(1e-12));

    const Scenario s2 = testutil::tiny_two_trajectory_scenario();
    // 0.75 * 0.6 + 0.25 * 0.4
    CHECK(rho(s2, 1, {1, 1}) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(rho(s2, 1, {2, 2}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rho validates the stop vector") {
    const Scenario s = testutil::tiny_scenario();
    CHECK_THROWS_AS(rho(s, 1, {3}), ValidationError);
    CHECK_THROWS_AS(rho(s, 1, {1, 1}), ValidationError);
}

TEST_CASE("xi_bar normalizes trajectory/reception products") {
    const Scenario s = testutil::tiny_two_trajectory_scenario();
    // both trajectories meet the deadline, so xi equals the trajectory probs
    const auto xi = xi_bar(s, 1, {1, 1}, TimingMode::deterministic());
    REQUIRE(xi.size() == 2);
    CHECK(xi[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(xi[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("xi_bar throws for a vehicle that can never report in time") {
    Scenario s = testutil::tiny_scenario();
    s.timing.deadline_s = 1.0;  // below comp + upload alone
    CHECK_THROWS_AS(xi_bar(s, 1, {1}, TimingMode::deterministic()), IneligibleVehicleError);
    CHECK(eligible_vehicles(s, TimingMode::deterministic()).empty());
}

TEST_CASE("omega hand example on the tiny scenario") {
    const Scenario s = testutil::tiny_scenario();
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{1});
    const auto b = omega(s, d, TimingMode::deterministic());
    // single vehicle, single trajectory: collected (0.8,0.2) vs target (0.56,0.44)
    CHECK(b.d_client == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(b.d_global == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(b.delta == doctest::Approx(1.00001).epsilon(1e-12));
    CHECK(b.omega == doctest::Approx(b.delta * 0.48 + 0.48).epsilon(1e-12));
    const auto& pv = b.per_vehicle.at(1);
    CHECK(pv.rho == doctest::Approx(0.6).epsilon(1e-12));
    double xsum = 0.0;
    for (double x : pv.xi) xsum += x;
    CHECK(xsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collecting the full trajectory zeroes both divergences here") {
    const Scenario s = testutil::tiny_scenario();
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{2});
    const auto b = omega(s, d, TimingMode::deterministic());
    // collected = global (0.35,0.65) vs target (0.56,0.44): emd = 0.42
    CHECK(b.d_client == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(b.d_global == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("chain inequality d_global <= d_client over random decisions") {
    Xoshiro256pp rng(55);
    const TimingMode mode = TimingMode::deterministic();
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        GeneratorSpec spec = testutil::small_spec(seed);
        spec.deadline_s = 200.0;  // keep most vehicles eligible
        const Scenario s = generate_synthetic(spec);
        for (int rep = 0; rep < 5; ++rep) {
            const Decision d = testutil::random_decision(s, mode, rng);
            if (d.selected.empty()) continue;
            const auto b = omega(s, d, mode);
            if (!std::isfinite(b.omega)) continue;
            REQUIRE(b.d_global <= b.d_client + 1e-12);
            REQUIRE(b.omega >= 0.0);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("omega is infinite when every selected vehicle has zero weight") {
    Scenario s = testutil::tiny_scenario();
    s.blocks[0].weight = 0.0;
    s.blocks[1].weight = 1.0;
    validate_and_normalize(s);
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{1});  // only block 1 traversed, weight 0
    const auto b = omega(s, d, TimingMode::deterministic());
    CHECK(std::isinf(b.omega));
}

TEST_CASE("omega rejects an empty selection") {
    const Scenario s = testutil::tiny_scenario();
    CHECK_THROWS_AS(omega(s, Decision{}, TimingMode::deterministic()), ValidationError);
}

TEST_CASE("uniform rescaling of block masses leaves divergences unchanged") {
    // distributions are ratios of Q_b, so Q -> k*Q is invisible to omega
    Scenario a = generate_synthetic(testutil::small_spec(31));
    Scenario b = a;
    for (auto& blk : b.blocks) blk.avg_objects *= 7.5;
    Xoshiro256pp rng(1);
    const Decision d = testutil::random_decision(a, TimingMode::deterministic(), rng);
    REQUIRE_FALSE(d.selected.empty());
    const auto ba = omega(a, d, TimingMode::deterministic());
    const auto bb = omega(b, d, TimingMode::deterministic());
    CHECK(ba.omega == doctest::Approx(bb.omega).epsilon(1e-12));
    CHECK(ba.d_global == doctest::Approx(bb.d_global).epsilon(1e-12));
}

TEST_CASE("convergence bound decreases as omega shrinks and can be infeasible") {
    const Scenario s = testutil::tiny_scenario();
    BoundParams p;
    p.rounds = 50;
    p.init_distance = 10.0;
    const auto good = convergence_bound({0.1, 0.1, 0.1}, p, s.timing, s.learning);
    const auto worse = convergence_bound({1.5, 1.5, 1.5}, p, s.timing, s.learning);
    REQUIRE(good.feasible);
    REQUIRE(worse.feasible);
    CHECK(good.value < worse.value);

    const auto broken = convergence_bound(std::vector<double>(1000, 2.0), p, s.timing, s.learning);
    CHECK_FALSE(broken.feasible);
    CHECK(std::isinf(broken.value));
}

TEST_CASE("breakdown serializes to json with per-vehicle terms") {
    const Scenario s = testutil::tiny_scenario();
    Decision d;
    d.selected = {1};
    d.stops.emplace(1, std::vector<int>{1});
    const std::string text = breakdown_to_json_text(omega(s, d, TimingMode::deterministic()));
    CHECK(text.find("\"omega\"") != std::string::npos);
    CHECK(text.find("\"per_vehicle\"") != std::string::npos);
    CHECK(text.find("\"rho\"") != std::string::npos);
}
