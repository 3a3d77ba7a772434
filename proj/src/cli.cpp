#include "sense4fl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sense4fl/baselines.hpp"
#include "sense4fl/flsim.hpp"
#include "sense4fl/objective.hpp"
#include "sense4fl/optimizer.hpp"
#include "sense4fl/scenario.hpp"

namespace sense4fl::cli {

namespace {

// Urban testbed stand-in used whenever no scenario file is given: 70 vehicles
// on a 5x5 grid, 10 classes, budget 10.
Scenario default_scenario() {
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

struct ScenarioOverrides {
    std::optional<int> local_steps;
    std::optional<double> lr;
    std::optional<double> deadline;
    std::optional<int> budget;
};

Scenario resolve_scenario(const std::string& path, const ScenarioOverrides& o) {
    Scenario s = path.empty() ? default_scenario() : load_scenario(path);
    if (o.local_steps) s.timing.local_steps = *o.local_steps;
    if (o.lr) s.learning.lr = *o.lr;
    if (o.deadline) s.timing.deadline_s = *o.deadline;
    if (o.budget) s.budget = *o.budget;
    validate_and_normalize(s);
    return s;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file \"" + path + "\"");
    out << text;
}

void add_scenario_flags(CLI::App* cmd, std::string& scenario_path, ScenarioOverrides& o) {
    cmd->add_option("--scenario", scenario_path, "Scenario JSON file (built-in default if omitted)");
    cmd->add_option("--local-steps", o.local_steps, "Override local SGD steps T");
    cmd->add_option("--lr", o.lr, "Override learning rate");
    cmd->add_option("--deadline", o.deadline, "Override round deadline T_task [s]");
    cmd->add_option("--budget", o.budget, "Override selection budget S");
}

TimingMode make_mode(const std::string& timing, int mc_samples, std::uint64_t seed) {
    if (timing == "det") return TimingMode::deterministic();
    if (timing == "mc") return TimingMode::monte_carlo(mc_samples, seed);
    throw ValidationError("timing must be det or mc, got \"" + timing + "\"");
}

void add_generator_flags(CLI::App* cmd, GeneratorSpec& g) {
    cmd->add_option("--blocks", g.num_blocks, "Street blocks");
    cmd->add_option("--vehicles", g.num_vehicles, "Vehicles");
    cmd->add_option("--classes", g.num_classes, "Object classes");
    cmd->add_option("--max-trajectories", g.max_trajectories, "Trajectories per vehicle");
    cmd->add_option("--max-blocks", g.max_blocks_per_trajectory, "Blocks per trajectory");
    cmd->add_option("--budget", g.budget, "Selection budget S");
    cmd->add_option("--alpha", g.dirichlet_alpha, "Dirichlet concentration (non-IID strength)");
    cmd->add_flag("--iid", g.iid, "All blocks share one class distribution");
    cmd->add_option("--deadline", g.deadline_s, "Round deadline T_task [s]");
}

std::string csv_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int run_impl(int argc, const char* const* argv) {
    CLI::App app{"Trajectory-aware vehicle selection and data collection for "
                 "federated object detection"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Master seed; every subcommand is deterministic given it");

    // --- gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario JSON");
    GeneratorSpec gen_spec;
    std::string gen_out;
    add_generator_flags(gen, gen_spec);
    gen->add_option("-o,--out", gen_out, "Output path (stdout if omitted)");

    // --- optimize ----------------------------------------------------------
    auto* opt = app.add_subcommand("optimize", "Select vehicles and stop blocks");
    std::string opt_scenario, opt_out, opt_timing = "det";
    ScenarioOverrides opt_over;
    int opt_mc_samples = 10000;
    bool opt_explain = false;
    add_scenario_flags(opt, opt_scenario, opt_over);
    opt->add_option("--timing", opt_timing, "Reception model: det or mc");
    opt->add_option("--mc-samples", opt_mc_samples, "Monte Carlo samples per reception estimate");
    opt->add_option("-o,--out", opt_out, "Selection JSON output path (stdout if omitted)");
    opt->add_flag("--explain", opt_explain, "Print a human-readable breakdown to stderr");

    // --- simulate ----------------------------------------------------------
    auto* sim = app.add_subcommand(
        "simulate", "Run federated training; CSV columns: round,strategy,seed,omega,uploads,"
                    "test_acc,test_loss");
    std::string sim_scenario, sim_out, sim_strategy = "sense4fl", sim_timing = "det";
    ScenarioOverrides sim_over;
    int sim_rounds = 50, sim_seeds = 1, sim_mc_samples = 10000;
    bool sim_churn = false;
    add_scenario_flags(sim, sim_scenario, sim_over);
    sim->add_option("--strategy", sim_strategy, "Selection strategy");
    sim->add_option("--rounds", sim_rounds, "Training rounds K");
    sim->add_option("--seeds", sim_seeds, "Independent repetitions (seed, seed+1, ...)");
    sim->add_option("--timing", sim_timing, "Reception model: det or mc");
    sim->add_option("--mc-samples", sim_mc_samples, "Monte Carlo samples per reception estimate");
    sim->add_flag("--churn", sim_churn, "Resample available vehicles each round");
    sim->add_option("-o,--out", sim_out, "CSV output path (stdout if omitted)");

    // --- compare -----------------------------------------------------------
    auto* cmp = app.add_subcommand(
        "compare", "Summary across strategies; CSV columns: strategy,mean_final_acc,mean_omega,"
                   "mean_uploads");
    std::string cmp_scenario, cmp_out, cmp_timing = "det";
    ScenarioOverrides cmp_over;
    std::vector<std::string> cmp_strategies;
    int cmp_rounds = 50, cmp_seeds = 3, cmp_mc_samples = 10000;
    add_scenario_flags(cmp, cmp_scenario, cmp_over);
    cmp->add_option("--strategies", cmp_strategies, "Strategies to run (default: all)");
    cmp->add_option("--rounds", cmp_rounds, "Training rounds K");
    cmp->add_option("--seeds", cmp_seeds, "Independent repetitions per strategy");
    cmp->add_option("--timing", cmp_timing, "Reception model: det or mc");
    cmp->add_option("--mc-samples", cmp_mc_samples, "Monte Carlo samples per reception estimate");
    cmp->add_option("-o,--out", cmp_out, "CSV output path (stdout if omitted)");

    // --- oracle ------------------------------------------------------------
    auto* orc = app.add_subcommand(
        "oracle", "Approximation-ratio sweep against the exhaustive optimum; CSV columns: "
                  "trial,objective,oracle_objective,ratio,bound");
    GeneratorSpec orc_spec;
    orc_spec.num_vehicles = 6;
    orc_spec.budget = 3;
    std::string orc_out, orc_dump = "oracle_violation.json";
    int orc_trials = 10;
    add_generator_flags(orc, orc_spec);
    orc->add_option("--trials", orc_trials, "Independent random instances");
    orc->add_option("-o,--out", orc_out, "CSV output path (stdout if omitted)");
    orc->add_option("--dump", orc_dump, "Where to write an instance that violates the bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // help/version requests exit 0; real parse errors are input errors
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        gen_spec.seed = seed;
        write_text(gen_out, scenario_to_json_text(generate_synthetic(gen_spec)));
        return 0;
    }

    if (opt->parsed()) {
        const Scenario s = resolve_scenario(opt_scenario, opt_over);
        OptimizerConfig config;
        config.mode = make_mode(opt_timing, opt_mc_samples, seed);
        const Selection sel = solve(s, config);
        write_text(opt_out, selection_to_json_text(sel));
        if (opt_explain) {
            std::cerr << "selected " << sel.decision.selected.size() << " of " << s.num_vehicles()
                      << " vehicles, budget " << s.budget << "\n"
                      << "delta = " << sel.breakdown.delta;
            if (sel.breakdown.delta == 0.0)
                std::cerr << " (T = 1: drift-free, step 1 ran with surrogate delta = 1)";
            std::cerr << "\nd_dagger = " << sel.d_dagger
                      << "\nd_client = " << sel.breakdown.d_client
                      << "\nd_global = " << sel.breakdown.d_global
                      << "\nomega    = " << sel.breakdown.omega << "\nlocal search: "
                      << sel.iters_used << " iterations, " << sel.swap_log.size() << " swaps\n";
        }
        return 0;
    }

    if (sim->parsed()) {
        const Scenario s = resolve_scenario(sim_scenario, sim_over);
        const Strategy strategy = strategy_from_name(sim_strategy);
        std::ostringstream csv;
        csv << round_log_csv_header() << '\n';
        for (int rep = 0; rep < sim_seeds; ++rep) {
            SimConfig cfg;
            cfg.rounds = sim_rounds;
            cfg.seed = seed + static_cast<std::uint64_t>(rep);
            cfg.mode = make_mode(sim_timing, sim_mc_samples, cfg.seed);
            cfg.optimizer.mode = cfg.mode;
            cfg.churn = sim_churn;
            for (const auto& log : run_training(s, strategy, cfg))
                csv << round_log_csv_row(log) << '\n';
        }
        write_text(sim_out, csv.str());
        return 0;
    }

    if (cmp->parsed()) {
        const Scenario s = resolve_scenario(cmp_scenario, cmp_over);
        std::vector<Strategy> strategies;
        if (cmp_strategies.empty())
            strategies = all_strategies();
        else
            for (const auto& name : cmp_strategies) strategies.push_back(strategy_from_name(name));

        struct Row {
            std::string name;
            double acc = 0.0, omega = 0.0, uploads = 0.0;
        };
        std::vector<Row> rows;
        for (Strategy strategy : strategies) {
            Row row;
            row.name = strategy_name(strategy);
            double omega_sum = 0.0, upload_sum = 0.0;
            long cells = 0;
            for (int rep = 0; rep < cmp_seeds; ++rep) {
                SimConfig cfg;
                cfg.rounds = cmp_rounds;
                cfg.seed = seed + static_cast<std::uint64_t>(rep);
                cfg.mode = make_mode(cmp_timing, cmp_mc_samples, cfg.seed);
                cfg.optimizer.mode = cfg.mode;
                const auto logs = run_training(s, strategy, cfg);
                if (!logs.empty()) row.acc += logs.back().test_acc;
                for (const auto& log : logs) {
                    omega_sum += log.omega;
                    upload_sum += log.uploads;
                    ++cells;
                }
            }
            row.acc /= std::max(1, cmp_seeds);
            row.omega = cells > 0 ? omega_sum / static_cast<double>(cells) : 0.0;
            row.uploads = cells > 0 ? upload_sum / static_cast<double>(cells) : 0.0;
            rows.push_back(std::move(row));
        }
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.acc > b.acc; });
        std::ostringstream csv;
        csv << "strategy,mean_final_acc,mean_omega,mean_uploads\n";
        for (const auto& row : rows)
            csv << row.name << ',' << csv_double(row.acc) << ',' << csv_double(row.omega) << ','
                << csv_double(row.uploads) << '\n';
        write_text(cmp_out, csv.str());
        return 0;
    }

    // oracle
    std::ostringstream csv;
    csv << "trial,objective,oracle_objective,ratio,bound\n";
    bool violated = false;
    for (int trial = 0; trial < orc_trials; ++trial) {
        orc_spec.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
        const Scenario s = generate_synthetic(orc_spec);
        const Selection sel = solve(s);
        const OracleResult oracle = brute_force(s, TimingMode::deterministic());
        const double d = delta(s);
        const double delta_eff = d > 0.0 ? d : 1.0;
        const double bound = (1.0 + delta_eff) / delta_eff;
        const double ratio = (sel.breakdown.omega + 1e-12) / (oracle.objective + 1e-12);
        csv << trial << ',' << csv_double(sel.breakdown.omega) << ','
            << csv_double(oracle.objective) << ',' << csv_double(ratio) << ','
            << csv_double(bound) << '\n';
        if (ratio > bound + 1e-9) {
            violated = true;
            save_scenario(s, orc_dump);
            std::cerr << "trial " << trial << ": ratio " << ratio << " exceeds bound " << bound
                      << "; instance written to " << orc_dump << "\n";
        }
    }
    write_text(orc_out, csv.str());
    return violated ? 4 : 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    try {
        return run_impl(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IneligibleVehicleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sense4fl::cli
