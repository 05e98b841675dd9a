#pragma once

#include <vector>

#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

namespace mapc {

struct ChannelParams {
    double carrier_freq_ghz = 2.4;
    double breakpoint_m = 5.0;
    double shadowing_sigma_db = 2.0;
    double nakagami_m = 1.5;
    double noise_floor_dbm = -94.0;
    double capture_threshold_db = 12.0;

    void validate() const;  // throws std::invalid_argument
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_linear(double db);

// TGax residential curve, planar (no floor/wall terms):
//   PL(d) = 40.05 + 20 log10(f/2.4) + 20 log10(min(d, bp)) + [d > bp] 35 log10(d/bp)
// pre: distance_m > 0
double path_loss_db(double distance_m, const ChannelParams& params = {});

// Frozen per run: path loss + one shadowing draw per ordered pair.
struct LargeScaleRealization {
    std::vector<std::vector<double>> gain_db;     // [ap][sta], negative dB
    std::vector<std::vector<double>> ap_gain_db;  // [ap][ap], sensing/polling paths
};

LargeScaleRealization build_large_scale(const TopologyScenario& scenario,
                                        const ChannelParams& params, RngStream& rng);

// Resampled every slot: unit-mean Nakagami-m power gains per ordered pair.
struct SlotFading {
    std::vector<std::vector<double>> power_gain;  // [ap][sta]
};

SlotFading sample_slot_fading(int bss_count, const ChannelParams& params, RngStream& rng);
SlotFading unit_fading(int bss_count);  // all-ones, for expectation-based checks

double sample_shadowing(RngStream& rng, double sigma_db);
double sample_nakagami_power(RngStream& rng, double m);

// SINR in dB at STA `k` while the APs in `active` transmit concurrently.
// Combining happens in the linear domain. pre: k is a member of active.
double compute_sinr_db(const std::vector<int>& active, int k,
                       const LargeScaleRealization& large_scale, const SlotFading& fading,
                       const std::vector<double>& tx_power_dbm, double noise_floor_dbm);

// Capture model; the boundary is inclusive.
bool slot_success(double sinr_db, double capture_threshold_db);

}  // namespace mapc
