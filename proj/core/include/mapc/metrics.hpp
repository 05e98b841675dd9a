#pragma once

#include <string>
#include <vector>

#include "mapc/agent.hpp"
#include "mapc/protocol.hpp"

namespace mapc {

struct TxopMetrics {
    std::vector<int> group;                  // sharing AP first
    std::vector<double> per_ap_throughput;   // successes / (rounds * slots), aligned with group
    double total_throughput = 0.0;           // sum over the group
    double collision_rate = 0.0;             // collided tx / attempted tx
    double idle_rate = 0.0;                  // group-idle slots / (rounds * slots)
    double mean_group_score = 0.0;
    long transmissions = 0;
    long successes = 0;
    long collisions = 0;
    int rounds = 0;
    int slots_per_round = 0;
    int fallback_rounds = 0;  // rounds in which at least one member fell back
};

TxopMetrics summarize_txop(const TxopResult& result);

struct AggregateStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 when n < 2
    int n = 0;
};

AggregateStats aggregate(const std::vector<double>& values);

// "scenario,policy,seed,..." summary table, one row per run.
std::string metrics_csv_header();
std::string metrics_csv_row(ScenarioKind kind, PolicyKind policy, std::uint64_t seed,
                            const TxopMetrics& metrics);

// Long-format per-slot grid for heatmaps: round,ap,slot,state.
std::string heatmap_csv(const TxopResult& result);

// Line-delimited JSON round log: one header object, then one object per
// round. Deterministic bytes for a given run.
std::string render_round_log(const TxopResult& result, const TopologyScenario& scenario,
                             const ChannelParams& channel, const TxopConfig& config,
                             PolicyKind policy, const AblationFlags& ablations,
                             std::uint64_t seed);

struct ParsedRoundLog {
    ScenarioKind kind = ScenarioKind::Random;
    int bss_count = 0;
    std::uint64_t seed = 0;
    PolicyKind policy = PolicyKind::Heuristic;
    TxopConfig config;
    TxopResult result;  // schedules, states, scores, group; messages not logged
};

// Inverse of render_round_log for replay; throws InfeasibleConfiguration on
// malformed input.
ParsedRoundLog parse_round_log(const std::string& text);

}  // namespace mapc
