#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "sense4fl/scenario.hpp"

using namespace sense4fl;

TEST_CASE("json round trip preserves the scenario") {
    const Scenario s = generate_synthetic(testutil::small_spec(3));
    const std::string text = scenario_to_json_text(s);
    const Scenario back = scenario_from_json_text(text);
    CHECK(back.num_blocks() == s.num_blocks());
    CHECK(back.num_vehicles() == s.num_vehicles());
    CHECK(back.budget == s.budget);
    // loading renormalizes, which can shave the last bit -> numeric comparison
    for (int b = 0; b < s.num_blocks(); ++b) {
        const auto& x = s.blocks[static_cast<std::size_t>(b)];
        const auto& y = back.blocks[static_cast<std::size_t>(b)];
        CHECK(y.id == x.id);
        CHECK(y.avg_objects == x.avg_objects);
        CHECK(y.weight == doctest::Approx(x.weight).epsilon(1e-15));
        for (std::size_t i = 0; i < x.class_dist.size(); ++i)
            CHECK(y.class_dist[i] == doctest::Approx(x.class_dist[i]).epsilon(1e-15));
    }
    for (int v = 0; v < s.num_vehicles(); ++v) {
        const auto& x = s.vehicles[static_cast<std::size_t>(v)];
        const auto& y = back.vehicles[static_cast<std::size_t>(v)];
        CHECK(y.id == x.id);
        REQUIRE(y.trajectories.size() == x.trajectories.size());
        for (std::size_t m = 0; m < x.trajectories.size(); ++m) {
            CHECK(y.trajectories[m].blocks == x.trajectories[m].blocks);
            CHECK(y.trajectories[m].prob ==
                  doctest::Approx(x.trajectories[m].prob).epsilon(1e-15));
            CHECK(y.trajectories[m].collected_count == x.trajectories[m].collected_count);
            CHECK(y.trajectories[m].sojourn.mean_s == x.trajectories[m].sojourn.mean_s);
        }
    }
    CHECK(back.timing.deadline_s == s.timing.deadline_s);
    CHECK(back.learning.lr == s.learning.lr);
}

TEST_CASE("unknown fields are rejected") {
    const Scenario s = generate_synthetic(testutil::small_spec(4));
    std::string text = scenario_to_json_text(s);
    text.replace(text.find("\"budget_s\""), 10, "\"budget_x\"");
    CHECK_THROWS_WITH_AS(scenario_from_json_text(text),
                         doctest::Contains("unknown field \"budget_x\""), ValidationError);
}

TEST_CASE("missing fields are rejected") {
    CHECK_THROWS_WITH_AS(scenario_from_json_text("{\"schema_version\": 1}"),
                         doctest::Contains("missing field"), ValidationError);
}

TEST_CASE("malformed json raises a parse error") {
    CHECK_THROWS_AS(scenario_from_json_text("{not json"), ParseError);
}

TEST_CASE("wrong schema_version is rejected") {
    const Scenario s = generate_synthetic(testutil::small_spec(5));
    std::string text = scenario_to_json_text(s);
    text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
    CHECK_THROWS_WITH_AS(scenario_from_json_text(text),
                         doctest::Contains("unsupported schema_version"), ValidationError);
}

TEST_CASE("validation names the offending entity") {
    Scenario s = testutil::tiny_scenario();

    SUBCASE("trajectory probs must sum to one") {
        s.vehicles[0].trajectories[0].prob = 0.5;
        CHECK_THROWS_WITH_AS(validate_and_normalize(s),
                             doctest::Contains("vehicle 1 trajectory probs sum to 0.5"),
                             ValidationError);
    }
    SUBCASE("block weights must sum to one") {
        s.blocks[0].weight = 0.9;
        CHECK_THROWS_WITH_AS(validate_and_normalize(s),
                             doctest::Contains("block weights sum to 1.3"), ValidationError);
    }
    SUBCASE("class distributions must be simplexes") {
        s.blocks[1].class_dist.probs = {0.2, 0.2};
        CHECK_THROWS_WITH_AS(validate_and_normalize(s), doctest::Contains("block 2 class_dist"),
                             ValidationError);
    }
    SUBCASE("collected_count stays within the trajectory") {
        s.vehicles[0].trajectories[0].collected_count = 3;
        CHECK_THROWS_WITH_AS(validate_and_normalize(s), doctest::Contains("collected_count 3"),
                             ValidationError);
    }
    SUBCASE("unknown block references are caught") {
        s.vehicles[0].trajectories[0].blocks = {1, 9};
        CHECK_THROWS_WITH_AS(validate_and_normalize(s),
                             doctest::Contains("references unknown block 9"), ValidationError);
    }
    SUBCASE("budget cannot exceed the fleet") {
        s.budget = 2;
        CHECK_THROWS_AS(validate_and_normalize(s), ValidationError);
    }
    SUBCASE("duplicate ids are caught") {
        s.blocks[1].id = 1;
        s.blocks[1].weight = 0.4;
        CHECK_THROWS_WITH_AS(validate_and_normalize(s), doctest::Contains("duplicate block id 1"),
                             ValidationError);
    }
}

TEST_CASE("normalization divides probability vectors exactly once") {
    Scenario s = testutil::tiny_scenario();
    // already normalized by the fixture; sums are exactly 1 afterwards
    double wsum = 0.0;
    for (const auto& b : s.blocks) wsum += b.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-15));
    double csum = 0.0;
    for (double p : s.blocks[0].class_dist.probs) csum += p;
    CHECK(csum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("generator is deterministic in the seed") {
    const Scenario a = generate_synthetic(testutil::small_spec(77));
    const Scenario b = generate_synthetic(testutil::small_spec(77));
    const Scenario c = generate_synthetic(testutil::small_spec(78));
    CHECK(scenario_to_json_text(a) == scenario_to_json_text(b));
    CHECK(scenario_to_json_text(a) != scenario_to_json_text(c));
}

TEST_CASE("generator output is valid and within bounds") {
    GeneratorSpec spec = testutil::small_spec(9);
    const Scenario s = generate_synthetic(spec);
    CHECK(s.num_blocks() == spec.num_blocks);
    CHECK(s.num_vehicles() == spec.num_vehicles);
    CHECK(s.budget == spec.budget);
    for (const auto& v : s.vehicles) {
        CHECK(static_cast<int>(v.trajectories.size()) <= spec.max_trajectories);
        const int start = v.trajectories.front().blocks.front();
        for (const auto& t : v.trajectories) {
            CHECK(t.length() <= spec.max_blocks_per_trajectory);
            CHECK(t.blocks.front() == start);  // shared current position
            CHECK(t.collected_count == 1);
        }
    }
}

TEST_CASE("iid generator gives every block the same distribution") {
    GeneratorSpec spec = testutil::small_spec(10);
    spec.iid = true;
    const Scenario s = generate_synthetic(spec);
    for (const auto& b : s.blocks)
        for (std::size_t i = 0; i < b.class_dist.size(); ++i)
            CHECK(b.class_dist[i] == doctest::Approx(s.blocks[0].class_dist[i]).epsilon(1e-15));
}

TEST_CASE("save and load through a file") {
    const Scenario s = generate_synthetic(testutil::small_spec(11));
    const std::string path = "test_scenario_tmp.json";
    save_scenario(s, path);
    const Scenario back = load_scenario(path);
    CHECK(scenario_to_json_text(back) == scenario_to_json_text(s));
    std::remove(path.c_str());
}
