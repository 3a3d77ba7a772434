#include "sense4fl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sense4fl/rng.hpp"

using nlohmann::json;

namespace sense4fl {

namespace {

constexpr double kProbTol = 1e-9;

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError(where + ": unknown field \"" + key + "\"");
    }
    for (const auto& key : allowed) {
        if (!j.contains(key))
            throw ValidationError(where + ": missing field \"" + key + "\"");
    }
}

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// Validates a probability vector sums to 1 within tolerance, then rescales it
// so downstream math sees an exact simplex.
void normalize_simplex(std::vector<double>& probs, const std::string& what) {
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw ValidationError(what + " has negative entry " + fmt(p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw ValidationError(what + " probs sum to " + fmt(sum));
    for (double& p : probs) p /= sum;
}

}  // namespace

const StreetBlock& Scenario::block(int id) const { return blocks[block_index(id)]; }
const VehicleProfile& Scenario::vehicle(int id) const { return vehicles[vehicle_index(id)]; }

int Scenario::block_index(int id) const {
    auto it = block_idx_.find(id);
    if (it == block_idx_.end())
        throw ValidationError("unknown block id " + std::to_string(id));
    return it->second;
}

int Scenario::vehicle_index(int id) const {
    auto it = vehicle_idx_.find(id);
    if (it == vehicle_idx_.end())
        throw ValidationError("unknown vehicle id " + std::to_string(id));
    return it->second;
}

void Scenario::reindex() {
    block_idx_.clear();
    vehicle_idx_.clear();
    for (int i = 0; i < num_blocks(); ++i) {
        if (!block_idx_.emplace(blocks[i].id, i).second)
            throw ValidationError("duplicate block id " + std::to_string(blocks[i].id));
    }
    for (int i = 0; i < num_vehicles(); ++i) {
        if (!vehicle_idx_.emplace(vehicles[i].id, i).second)
            throw ValidationError("duplicate vehicle id " + std::to_string(vehicles[i].id));
    }
}

void validate_and_normalize(Scenario& s) {
    if (s.blocks.empty()) throw ValidationError("scenario has no blocks");
    if (s.vehicles.empty()) throw ValidationError("scenario has no vehicles");
    s.reindex();

    const int classes = s.num_classes();
    if (classes < 1) throw ValidationError("blocks must have at least one class");

    double weight_sum = 0.0;
    for (auto& b : s.blocks) {
        const std::string tag = "block " + std::to_string(b.id);
        if (b.id < 1) throw ValidationError(tag + ": id must be >= 1");
        if (b.avg_objects <= 0.0) throw ValidationError(tag + ": avg_objects must be positive");
        if (b.weight < 0.0) throw ValidationError(tag + ": weight must be non-negative");
        if (static_cast<int>(b.class_dist.size()) != classes)
            throw ValidationError(tag + ": class_dist length differs from other blocks");
        normalize_simplex(b.class_dist.probs, tag + " class_dist");
        weight_sum += b.weight;
    }
    if (std::abs(weight_sum - 1.0) > kProbTol)
        throw ValidationError("block weights sum to " + fmt(weight_sum));
    for (auto& b : s.blocks) b.weight /= weight_sum;

    for (auto& v : s.vehicles) {
        const std::string tag = "vehicle " + std::to_string(v.id);
        if (v.flops <= 0.0) throw ValidationError(tag + ": flops must be positive");
        if (v.cycles_per_sample <= 0.0)
            throw ValidationError(tag + ": cycles_per_sample must be positive");
        if (v.min_rate_bps <= 0.0) throw ValidationError(tag + ": min_rate_bps must be positive");
        if (v.trajectories.empty()) throw ValidationError(tag + ": needs at least one trajectory");

        double q_sum = 0.0;
        for (std::size_t m = 0; m < v.trajectories.size(); ++m) {
            auto& t = v.trajectories[m];
            const std::string ttag = tag + " trajectory " + std::to_string(m);
            if (t.blocks.empty()) throw ValidationError(ttag + ": empty block list");
            for (int bid : t.blocks) {
                if (!std::count_if(s.blocks.begin(), s.blocks.end(),
                                   [bid](const StreetBlock& b) { return b.id == bid; }))
                    throw ValidationError(ttag + ": references unknown block " +
                                          std::to_string(bid));
            }
            if (t.prob < 0.0 || t.prob > 1.0)
                throw ValidationError(ttag + ": prob " + fmt(t.prob) + " outside [0,1]");
            if (t.collected_count < 1 || t.collected_count > t.length())
                throw ValidationError(ttag + ": collected_count " +
                                      std::to_string(t.collected_count) + " outside [1, " +
                                      std::to_string(t.length()) + "]");
            if (static_cast<int>(t.sojourn.mean_s.size()) != t.length() ||
                static_cast<int>(t.sojourn.std_s.size()) != t.length())
                throw ValidationError(ttag + ": sojourn arrays must match trajectory length");
            for (int i = 0; i < t.length(); ++i) {
                if (t.sojourn.mean_s[i] <= 0.0)
                    throw ValidationError(ttag + ": sojourn mean must be positive");
                if (t.sojourn.std_s[i] < 0.0)
                    throw ValidationError(ttag + ": sojourn std must be non-negative");
                if (t.sojourn.dist == SojournDist::Deterministic && t.sojourn.std_s[i] != 0.0)
                    throw ValidationError(ttag + ": deterministic sojourn requires std 0");
            }
            q_sum += t.prob;
        }
        if (std::abs(q_sum - 1.0) > kProbTol)
            throw ValidationError(tag + " trajectory probs sum to " + fmt(q_sum));
        for (auto& t : v.trajectories) t.prob /= q_sum;
    }

    if (s.timing.deadline_s <= 0.0) throw ValidationError("timing.deadline_s must be positive");
    if (s.timing.model_bits <= 0.0) throw ValidationError("timing.model_bits must be positive");
    if (s.timing.wired_delay_s < 0.0)
        throw ValidationError("timing.wired_delay_s must be non-negative");
    if (s.timing.batch_size < 1) throw ValidationError("timing.batch_size must be >= 1");
    if (s.timing.local_steps < 1) throw ValidationError("timing.local_steps must be >= 1");
    if (s.learning.lr <= 0.0) throw ValidationError("learning.lr must be positive");
    if (s.learning.lipschitz <= 0.0) throw ValidationError("learning.lipschitz must be positive");
    if (s.budget < 1) throw ValidationError("budget_s must be >= 1");
    if (s.budget > s.num_vehicles())
        throw ValidationError("budget_s " + std::to_string(s.budget) + " exceeds vehicle count " +
                              std::to_string(s.num_vehicles()));
}

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario parse error: ") + e.what());
    }

    require_keys(j, {"schema_version", "blocks", "vehicles", "timing", "learning", "budget_s"},
                 "scenario");
    if (j.at("schema_version").get<int>() != 1)
        throw ValidationError("unsupported schema_version " + j.at("schema_version").dump());

    Scenario s;
    for (const auto& jb : j.at("blocks")) {
        require_keys(jb, {"id", "avg_objects", "class_dist", "weight"}, "block");
        StreetBlock b;
        b.id = jb.at("id").get<int>();
        b.avg_objects = jb.at("avg_objects").get<double>();
        b.class_dist.probs = jb.at("class_dist").get<std::vector<double>>();
        b.weight = jb.at("weight").get<double>();
        s.blocks.push_back(std::move(b));
    }
    for (const auto& jv : j.at("vehicles")) {
        require_keys(jv, {"id", "flops", "cycles_per_sample", "min_rate_bps", "trajectories"},
                     "vehicle");
        VehicleProfile v;
        v.id = jv.at("id").get<int>();
        v.flops = jv.at("flops").get<double>();
        v.cycles_per_sample = jv.at("cycles_per_sample").get<double>();
        v.min_rate_bps = jv.at("min_rate_bps").get<double>();
        for (const auto& jt : jv.at("trajectories")) {
            require_keys(jt, {"blocks", "prob", "collected_count", "sojourn"}, "trajectory");
            Trajectory t;
            t.blocks = jt.at("blocks").get<std::vector<int>>();
            t.prob = jt.at("prob").get<double>();
            t.collected_count = jt.at("collected_count").get<int>();
            const auto& js = jt.at("sojourn");
            require_keys(js, {"mean_s", "std_s", "dist"}, "sojourn");
            t.sojourn.mean_s = js.at("mean_s").get<std::vector<double>>();
            t.sojourn.std_s = js.at("std_s").get<std::vector<double>>();
            const std::string kind = js.at("dist").get<std::string>();
            if (kind == "deterministic")
                t.sojourn.dist = SojournDist::Deterministic;
            else if (kind == "truncated_gaussian")
                t.sojourn.dist = SojournDist::TruncatedGaussian;
            else
                throw ValidationError("unknown sojourn dist \"" + kind + "\"");
            v.trajectories.push_back(std::move(t));
        }
        s.vehicles.push_back(std::move(v));
    }
    const auto& jt = j.at("timing");
    require_keys(jt, {"deadline_s", "model_bits", "wired_delay_s", "batch_size", "local_steps"},
                 "timing");
    s.timing.deadline_s = jt.at("deadline_s").get<double>();
    s.timing.model_bits = jt.at("model_bits").get<double>();
    s.timing.wired_delay_s = jt.at("wired_delay_s").get<double>();
    s.timing.batch_size = jt.at("batch_size").get<int>();
    s.timing.local_steps = jt.at("local_steps").get<int>();
    const auto& jl = j.at("learning");
    require_keys(jl, {"lr", "lipschitz"}, "learning");
    s.learning.lr = jl.at("lr").get<double>();
    s.learning.lipschitz = jl.at("lipschitz").get<double>();
    s.budget = j.at("budget_s").get<int>();

    validate_and_normalize(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

std::string scenario_to_json_text(const Scenario& s) {
    json j;
    j["schema_version"] = 1;
    j["blocks"] = json::array();
    for (const auto& b : s.blocks) {
        j["blocks"].push_back({{"id", b.id},
                               {"avg_objects", b.avg_objects},
                               {"class_dist", b.class_dist.probs},
                               {"weight", b.weight}});
    }
    j["vehicles"] = json::array();
    for (const auto& v : s.vehicles) {
        json jts = json::array();
        for (const auto& t : v.trajectories) {
            jts.push_back(
                {{"blocks", t.blocks},
                 {"prob", t.prob},
                 {"collected_count", t.collected_count},
                 {"sojourn",
                  {{"mean_s", t.sojourn.mean_s},
                   {"std_s", t.sojourn.std_s},
                   {"dist", t.sojourn.dist == SojournDist::Deterministic ? "deterministic"
                                                                         : "truncated_gaussian"}}}});
        }
        j["vehicles"].push_back({{"id", v.id},
                                 {"flops", v.flops},
                                 {"cycles_per_sample", v.cycles_per_sample},
                                 {"min_rate_bps", v.min_rate_bps},
                                 {"trajectories", std::move(jts)}});
    }
    j["timing"] = {{"deadline_s", s.timing.deadline_s},
                   {"model_bits", s.timing.model_bits},
                   {"wired_delay_s", s.timing.wired_delay_s},
                   {"batch_size", s.timing.batch_size},
                   {"local_steps", s.timing.local_steps}};
    j["learning"] = {{"lr", s.learning.lr}, {"lipschitz", s.learning.lipschitz}};
    j["budget_s"] = s.budget;
    return j.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write scenario file: " + path);
    out << scenario_to_json_text(s);
}

Scenario generate_synthetic(const GeneratorSpec& spec) {
    if (spec.num_blocks < 1 || spec.num_vehicles < 1 || spec.num_classes < 1 ||
        spec.max_trajectories < 1 || spec.max_blocks_per_trajectory < 1 || spec.budget < 1)
        throw ValidationError("generator spec: all counts must be >= 1");
    if (spec.budget > spec.num_vehicles)
        throw ValidationError("generator spec: budget " + std::to_string(spec.budget) +
                              " exceeds vehicle count " + std::to_string(spec.num_vehicles));

    Xoshiro256pp rng(derive_seed(spec.seed, 0xabcdULL));
    Scenario s;

    const int B = spec.num_blocks;
    std::vector<double> iid_dist;
    if (spec.iid) iid_dist = rng.dirichlet(1.0, spec.num_classes);

    std::vector<double> raw_weights(static_cast<std::size_t>(B));
    double wsum = 0.0;
    for (auto& w : raw_weights) {
        w = rng.uniform(0.2, 1.0);
        wsum += w;
    }
    for (int b = 0; b < B; ++b) {
        StreetBlock blk;
        blk.id = b + 1;
        blk.avg_objects = rng.uniform(50.0, 300.0);
        blk.class_dist.probs =
            spec.iid ? iid_dist : rng.dirichlet(spec.dirichlet_alpha, spec.num_classes);
        blk.weight = raw_weights[static_cast<std::size_t>(b)] / wsum;
        s.blocks.push_back(std::move(blk));
    }

    // grid adjacency over block ids 1..B, row-major with width ceil(sqrt(B))
    const int width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(B))));
    auto neighbors = [&](int id) {
        std::vector<int> out;
        const int idx = id - 1;
        const int r = idx / width, c = idx % width;
        auto add = [&](int rr, int cc) {
            const int n = rr * width + cc;
            if (rr >= 0 && cc >= 0 && cc < width && n < B) out.push_back(n + 1);
        };
        add(r - 1, c);
        add(r + 1, c);
        add(r, c - 1);
        add(r, c + 1);
        if (out.empty()) out.push_back(id);
        return out;
    };

    for (int vi = 0; vi < spec.num_vehicles; ++vi) {
        VehicleProfile v;
        v.id = vi + 1;
        v.flops = 4.0e10;
        v.cycles_per_sample = 9.8304e7;
        v.min_rate_bps = 5.0e7;

        const int m_count = 1 + static_cast<int>(rng.uniform_int(
                                    static_cast<std::uint64_t>(spec.max_trajectories)));
        std::vector<double> raw_q(static_cast<std::size_t>(m_count));
        double qsum = 0.0;
        for (auto& q : raw_q) {
            q = rng.uniform(0.1, 1.0);
            qsum += q;
        }
        const int start = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(B)));
        for (int m = 0; m < m_count; ++m) {
            Trajectory t;
            const int len = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                                    spec.max_blocks_per_trajectory)));
            int cur = start;  // all trajectories of a vehicle share the current block
            t.blocks.push_back(cur);
            for (int i = 1; i < len; ++i) {
                const auto ns = neighbors(cur);
                cur = ns[rng.uniform_int(ns.size())];
                t.blocks.push_back(cur);
            }
            t.prob = raw_q[static_cast<std::size_t>(m)] / qsum;
            t.collected_count = 1;
            for (int i = 0; i < t.length(); ++i) {
                const double mean = rng.uniform(spec.sojourn_mean_lo, spec.sojourn_mean_hi);
                t.sojourn.mean_s.push_back(mean);
                t.sojourn.std_s.push_back(0.2 * mean);
            }
            t.sojourn.dist = SojournDist::TruncatedGaussian;
            v.trajectories.push_back(std::move(t));
        }
        s.vehicles.push_back(std::move(v));
    }

    s.timing.deadline_s = spec.deadline_s;
    s.budget = spec.budget;
    validate_and_normalize(s);
    return s;
}

}  // namespace sense4fl
