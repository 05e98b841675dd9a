#pragma once

#include <utility>
#include <vector>

#include "mapc/channel.hpp"
#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

namespace mapc {

struct MacParams {
    double slot_us = 9.0;
    double difs_us = 34.0;
    int cw_min = 15;  // backoff draws are uniform over [0, cw]
    int cw_max = 1023;
    double cca_dbm = -82.0;
    double packet_airtime_us = 400.0;

    void validate() const;  // throws std::invalid_argument
};

struct ContentionResult {
    int winner_ap = -1;
    long winning_backoff = 0;  // winner's draw in the deciding round, in slots
    int redraw_rounds = 0;     // rounds lost to tied minima
};

// Synchronized-draw abstraction of CSMA/CA contention: every contender draws
// a backoff from [0, cw]; the unique minimum wins the TXOP. A tied minimum
// doubles every window (capped at cw_max) and redraws. 64 rounds without a
// unique winner throws ContentionDeadlock.
ContentionResult contend(const std::vector<int>& contenders, const MacParams& params,
                         RngStream& rng);

// A medium reservation legacy APs must honor when they can hear its source.
struct ReservedInterval {
    double start_us = 0.0;
    double end_us = 0.0;
    int source_ap = 0;
};

struct LegacyConfig {
    MacParams mac;
    double horizon_us = 200000.0;
    double sense_threshold_dbm = -82.0;  // energy-detect level for deferral
    std::vector<double> tx_power_dbm;    // per-AP override; empty = scenario power
    std::vector<ReservedInterval> reservations;
};

struct LegacyStats {
    std::vector<double> success_airtime_us;  // per AP, only packets that survived
    std::vector<long> packets;
    std::vector<long> failures;
    std::vector<double> utilization;  // success airtime / horizon
    double total_utilization = 0.0;
};

// Event-driven saturated-downlink CSMA/CA over a fixed horizon. Sensing uses
// the frozen large-scale gains; per-packet Nakagami fading decides losses via
// the same capture rule as the slotted simulator. Deterministic in the seed.
LegacyStats run_legacy_traffic(const TopologyScenario& scenario,
                               const LargeScaleRealization& large_scale,
                               const ChannelParams& channel, const LegacyConfig& config,
                               const std::vector<int>& participants, std::uint64_t master_seed);

struct ObssPdConfig {
    double pd_threshold_dbm = -82.0;  // raised energy-detect level
    double requested_tx_dbm = 20.0;
    double reference_tx_dbm = 20.0;  // cap anchor: full power only at legacy sensitivity
};

// min(requested, reference - (pd_threshold - cca)): each dB of deafness costs
// a dB of transmit power.
double obss_pd_tx_power_cap(const ObssPdConfig& pd, double cca_dbm);

// Legacy run under OBSS/PD spatial reuse: sense threshold max(cca, pd) and
// capped transmit power. At pd == cca this reduces to run_legacy_traffic
// exactly (same draws, same outcomes).
LegacyStats run_obss_pd_baseline(const TopologyScenario& scenario,
                                 const LargeScaleRealization& large_scale,
                                 const ChannelParams& channel, const LegacyConfig& config,
                                 const ObssPdConfig& pd, const std::vector<int>& participants,
                                 std::uint64_t master_seed);

struct ObssPdSweepPoint {
    double threshold_dbm = 0.0;
    double power_dbm = 0.0;  // requested power for this grid point
    double total_utilization = 0.0;
};

struct ObssPdSweepResult {
    std::vector<ObssPdSweepPoint> grid;
    int best_index = -1;  // max utilization; ties prefer lower power, then lower threshold
};

// Grid search: thresholds -82..-62 dBm step 4, requested powers 5..20 dBm
// step 5, same seed per point.
ObssPdSweepResult sweep_obss_pd(const TopologyScenario& scenario,
                                const LargeScaleRealization& large_scale,
                                const ChannelParams& channel, const LegacyConfig& config,
                                const std::vector<int>& participants, std::uint64_t master_seed);

}  // namespace mapc
