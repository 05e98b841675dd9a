#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mapc/errors.hpp"
#include "mapc/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct RunCliOptions {
    std::string config_path;
    std::string scenario;
    int bss_count = -1;
    std::string policy;
    int rounds = -1;
    int slots = -1;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> ablations;
    std::string scenario_file;
    std::string out_dir;
    std::string kb_in;
    std::string kb_out;
    bool seed_kb = false;
    int threads = 0;
    bool print_config = false;
};

void add_common_run_options(CLI::App* cmd, RunCliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "JSON config file; CLI flags override it");
    cmd->add_option("--scenario", opt.scenario, "co_tdma | co_sr | random")
        ->check(CLI::IsMember({"co_tdma", "co_sr", "random", "co_tdma_favored", "co_sr_favored"}));
    cmd->add_option("--k,--bss-count", opt.bss_count, "number of BSSs");
    cmd->add_option("--policy", opt.policy, "llm | heuristic | genie | scripted")
        ->check(CLI::IsMember({"llm", "heuristic", "genie", "scripted"}));
    cmd->add_option("--rounds", opt.rounds, "negotiation rounds per TXOP");
    cmd->add_option("--slots", opt.slots, "slots per round");
    cmd->add_option("--seeds", opt.seeds, "seed list, e.g. --seeds 0 1 2");
    cmd->add_option("--ablate", opt.ablations,
                    "no_reflection | no_negotiation | no_stm | no_ltm (repeatable or comma-separated)")
        ->delimiter(',');
    cmd->add_option("--scenario-file", opt.scenario_file, "fixed topology JSON for every seed");
    cmd->add_option("--out", opt.out_dir, "output directory for logs and tables");
    cmd->add_option("--kb-in", opt.kb_in, "knowledge base bundle to preload");
    cmd->add_option("--kb-out", opt.kb_out, "where to store the final knowledge bases");
    cmd->add_flag("--seed-kb", opt.seed_kb, "preload the packaged seed exemplars");
    cmd->add_option("--threads", opt.threads, "parallel seeds (llm runs stay sequential)");
    cmd->add_flag("--print-config", opt.print_config, "dump the effective config and exit");
}

mapc::RunConfig build_config(const RunCliOptions& opt) {
    mapc::RunConfig config;
    if (!opt.config_path.empty()) config = mapc::run_config_from_json(slurp(opt.config_path));
    if (!opt.scenario.empty()) config.kind = mapc::scenario_kind_from_string(opt.scenario);
    if (opt.bss_count > 0) config.bss_count = opt.bss_count;
    if (!opt.policy.empty()) config.policy = mapc::policy_kind_from_string(opt.policy);
    if (opt.rounds > 0) config.txop.rounds = opt.rounds;
    if (opt.slots > 0) config.txop.slots_per_round = opt.slots;
    if (!opt.seeds.empty()) config.seeds = opt.seeds;
    if (!opt.scenario_file.empty()) config.scenario_file = opt.scenario_file;
    if (!opt.out_dir.empty()) config.out_dir = opt.out_dir;
    if (!opt.kb_in.empty()) config.kb_in = opt.kb_in;
    if (!opt.kb_out.empty()) config.kb_out = opt.kb_out;
    if (opt.seed_kb) config.seed_kb = true;
    if (opt.threads > 0) config.threads = opt.threads;
    for (const auto& name : opt.ablations) mapc::apply_ablation(config, name);
    return config;
}

void print_stats(const char* label, const mapc::AggregateStats& stats) {
    std::printf("%-16s mean=%.4f stddev=%.4f n=%d\n", label, stats.mean, stats.stddev, stats.n);
}

int cmd_run(const RunCliOptions& opt) {
    mapc::RunConfig config = build_config(opt);
    if (opt.print_config) {
        std::cout << mapc::run_config_to_json(config) << "\n";
        return 0;
    }
    mapc::ExperimentResult result = mapc::run_experiment(config);
    std::cout << result.summary_csv;
    std::printf("\n");
    print_stats("throughput", result.throughput);
    print_stats("collision_rate", result.collision_rate);
    print_stats("idle_rate", result.idle_rate);
    print_stats("group_score", result.group_score);
    if (!config.out_dir.empty())
        std::printf("\nlogs written to %s\n", config.out_dir.c_str());
    for (const auto& run : result.runs)
        for (const auto& warning : run.txop.warnings)
            std::fprintf(stderr, "seed %llu: %s\n",
                         static_cast<unsigned long long>(run.seed), warning.c_str());
    return 0;
}

int cmd_baseline(const RunCliOptions& opt, std::uint64_t seed) {
    mapc::RunConfig config = build_config(opt);
    mapc::BaselineSuiteResult result = mapc::run_baseline_suite(config, seed);
    std::cout << result.summary;
    return 0;
}

int cmd_sweep(const RunCliOptions& opt, std::uint64_t seed, double horizon_us,
              const std::string& csv_out) {
    mapc::RunConfig config = build_config(opt);
    mapc::TopologyScenario scenario;
    if (!config.scenario_file.empty())
        scenario = mapc::parse_scenario(slurp(config.scenario_file));
    else
        scenario = mapc::generate_scenario(config.kind, config.bss_count, seed, config.topology);
    mapc::RngStream shadow_rng(seed, {mapc::RngStream::tag("shadowing")});
    auto large_scale = mapc::build_large_scale(scenario, config.channel, shadow_rng);

    mapc::LegacyConfig legacy;
    legacy.mac = config.mac;
    legacy.sense_threshold_dbm = config.mac.cca_dbm;
    if (horizon_us > 0) legacy.horizon_us = horizon_us;
    std::vector<int> participants(scenario.bss_count);
    for (int i = 0; i < scenario.bss_count; ++i) participants[i] = i;

    mapc::ObssPdSweepResult sweep =
        mapc::sweep_obss_pd(scenario, large_scale, config.channel, legacy, participants, seed);

    std::ostringstream csv;
    csv << "pd_threshold_dbm,requested_tx_dbm,total_utilization\n";
    for (const auto& point : sweep.grid) {
        char row[96];
        std::snprintf(row, sizeof(row), "%.0f,%.0f,%.6f\n", point.threshold_dbm, point.power_dbm,
                      point.total_utilization);
        csv << row;
    }
    std::cout << csv.str();
    if (sweep.best_index >= 0) {
        const auto& best = sweep.grid[static_cast<std::size_t>(sweep.best_index)];
        std::printf("best: threshold=%.0f dBm power=%.0f dBm utilization=%.6f\n",
                    best.threshold_dbm, best.power_dbm, best.total_utilization);
    }
    if (!csv_out.empty()) spill(csv_out, csv.str());
    return 0;
}

int cmd_replay(const std::string& log_path) {
    mapc::ReplayReport report = mapc::replay_round_log(slurp(log_path));
    std::printf("rounds=%d group_size=%zu total_throughput=%.4f collision_rate=%.4f\n",
                report.metrics.rounds, report.log.result.group.size(),
                report.metrics.total_throughput, report.metrics.collision_rate);
    if (report.scores_match) {
        std::printf("scores: verified\n");
        return 0;
    }
    std::printf("scores: MISMATCH (%s)\n", report.mismatch.c_str());
    return 1;
}

int cmd_topo(const std::string& kind, int bss_count, std::uint64_t seed,
             const std::string& out_path) {
    mapc::TopologyParams params;
    mapc::TopologyScenario scenario =
        mapc::generate_scenario(mapc::scenario_kind_from_string(kind), bss_count, seed, params);
    std::string text = mapc::serialize_scenario(scenario);
    if (out_path.empty())
        std::cout << text << "\n";
    else
        spill(out_path, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OBSS downlink simulator with negotiating AP agents"};
    app.require_subcommand(1);

    RunCliOptions run_opt;
    CLI::App* run_cmd = app.add_subcommand("run", "run a multi-seed experiment");
    add_common_run_options(run_cmd, run_opt);

    RunCliOptions baseline_opt;
    std::uint64_t baseline_seed = 0;
    CLI::App* baseline_cmd =
        app.add_subcommand("baseline-suite", "genie, heuristic, legacy and OBSS/PD on one seed");
    add_common_run_options(baseline_cmd, baseline_opt);
    baseline_cmd->add_option("--seed", baseline_seed, "seed for the suite");

    RunCliOptions sweep_opt;
    std::uint64_t sweep_seed = 0;
    double sweep_horizon_us = -1.0;
    std::string sweep_csv;
    CLI::App* sweep_cmd = app.add_subcommand("sweep-obsspd", "OBSS/PD threshold and power grid");
    add_common_run_options(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--seed", sweep_seed, "seed for the sweep");
    sweep_cmd->add_option("--horizon-us", sweep_horizon_us, "legacy traffic horizon");
    sweep_cmd->add_option("--csv", sweep_csv, "also write the grid to this file");

    std::string replay_path;
    CLI::App* replay_cmd = app.add_subcommand("replay", "verify a round log's stored scores");
    replay_cmd->add_option("log,--log", replay_path, "rounds_*.jsonl file")->required();

    std::string topo_kind = "random";
    int topo_k = 2;
    std::uint64_t topo_seed = 0;
    std::string topo_out;
    CLI::App* topo_cmd = app.add_subcommand("topo", "generate a topology JSON");
    topo_cmd->add_option("--scenario", topo_kind, "co_tdma | co_sr | random")
        ->check(CLI::IsMember({"co_tdma", "co_sr", "random", "co_tdma_favored", "co_sr_favored"}));
    topo_cmd->add_option("--k,--bss-count", topo_k, "number of BSSs");
    topo_cmd->add_option("--seed", topo_seed, "placement seed");
    topo_cmd->add_option("--out", topo_out, "output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run_opt);
        if (baseline_cmd->parsed()) return cmd_baseline(baseline_opt, baseline_seed);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_opt, sweep_seed, sweep_horizon_us, sweep_csv);
        if (replay_cmd->parsed()) return cmd_replay(replay_path);
        if (topo_cmd->parsed()) return cmd_topo(topo_kind, topo_k, topo_seed, topo_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
