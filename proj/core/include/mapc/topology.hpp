#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mapc {

enum class ScenarioKind { CoTdmaFavored, CoSrFavored, Random };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

struct NodePosition {
    double x = 0.0;
    double y = 0.0;
};

double pairwise_distance(const NodePosition& a, const NodePosition& b);

struct TopologyParams {
    double arena_m = 90.0;
    double sta_min_m = 1.0;
    double sta_max_m = 3.0;
    double tdma_ap_min_m = 3.0;
    double tdma_ap_max_m = 6.0;
    // Co-TDMA cross-link cap: every interfering AP must sit within
    // min(ratio * own-link distance, cap) of each STA, which keeps the
    // interference path loss within ~5 dB of the signal path loss.
    double tdma_cross_ratio = 1.78;
    double tdma_cross_cap_m = 5.2;
    double sr_ap_min_m = 55.0;
    double sr_ap_max_m = 70.0;
    double random_ap_min_m = 3.0;
    double min_separation_m = 1.0;
    int max_attempts = 10000;
    double tx_power_dbm = 20.0;
};

// One BSS = one AP with a single saturated-downlink STA.
struct TopologyScenario {
    int bss_count = 0;
    std::vector<NodePosition> ap_positions;
    std::vector<NodePosition> sta_positions;  // sta i associates with ap i
    std::vector<double> tx_power_dbm;         // per AP
    ScenarioKind kind = ScenarioKind::Random;
    std::uint64_t seed = 0;
};

// Deterministic in (kind, bss_count, seed). Throws InfeasibleConfiguration
// when bss_count < 2 or placement cannot satisfy the kind's constraints
// within max_attempts.
TopologyScenario generate_scenario(ScenarioKind kind, int bss_count, std::uint64_t seed,
                                   const TopologyParams& params = {});

// JSON document with exactly the TopologyScenario fields; doubles round-trip
// bit-exact (shortest round-trip decimal).
std::string serialize_scenario(const TopologyScenario& scenario);
TopologyScenario parse_scenario(const std::string& text);  // throws InfeasibleConfiguration

}  // namespace mapc
