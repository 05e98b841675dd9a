#include "mapc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mapc {

void ChannelParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(carrier_freq_ghz)) throw std::invalid_argument("carrier_freq_ghz must be positive");
    if (!positive(breakpoint_m)) throw std::invalid_argument("breakpoint_m must be positive");
    if (!(std::isfinite(shadowing_sigma_db) && shadowing_sigma_db >= 0.0))
        throw std::invalid_argument("shadowing_sigma_db must be non-negative");
    if (!positive(nakagami_m)) throw std::invalid_argument("nakagami_m must be positive");
    if (!std::isfinite(noise_floor_dbm)) throw std::invalid_argument("noise_floor_dbm must be finite");
    if (!std::isfinite(capture_threshold_db))
        throw std::invalid_argument("capture_threshold_db must be finite");
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double path_loss_db(double distance_m, const ChannelParams& params) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("path_loss_db: distance must be > 0");
    double pl = 40.05 + 20.0 * std::log10(params.carrier_freq_ghz / 2.4) +
                20.0 * std::log10(std::min(distance_m, params.breakpoint_m));
    if (distance_m > params.breakpoint_m)
        pl += 35.0 * std::log10(distance_m / params.breakpoint_m);
    return pl;
}

double sample_shadowing(RngStream& rng, double sigma_db) {
    return rng.normal(0.0, sigma_db);
}

double sample_nakagami_power(RngStream& rng, double m) { return rng.nakagami_power(m); }

LargeScaleRealization build_large_scale(const TopologyScenario& scenario,
                                        const ChannelParams& params, RngStream& rng) {
    params.validate();
    const int k = scenario.bss_count;
    LargeScaleRealization ls;
    ls.gain_db.assign(k, std::vector<double>(k, 0.0));
    ls.ap_gain_db.assign(k, std::vector<double>(k, 0.0));

    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double d = pairwise_distance(scenario.ap_positions[i], scenario.sta_positions[j]);
            double g = -path_loss_db(d, params) + sample_shadowing(rng, params.shadowing_sigma_db);
            if (!std::isfinite(g) || g >= 0.0)
                throw std::runtime_error("large-scale gain invariant violated (entry not < 0 dB)");
            ls.gain_db[i][j] = g;
        }
    }
    // AP-AP paths are reciprocal: one shadowing draw per unordered pair.
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            double d = pairwise_distance(scenario.ap_positions[i], scenario.ap_positions[j]);
            double g = -path_loss_db(d, params) + sample_shadowing(rng, params.shadowing_sigma_db);
            if (!std::isfinite(g) || g >= 0.0)
                throw std::runtime_error("large-scale AP gain invariant violated");
            ls.ap_gain_db[i][j] = g;
            ls.ap_gain_db[j][i] = g;
        }
    }
    return ls;
}

SlotFading sample_slot_fading(int bss_count, const ChannelParams& params, RngStream& rng) {
    SlotFading fading;
    fading.power_gain.assign(bss_count, std::vector<double>(bss_count, 1.0));
    for (int i = 0; i < bss_count; ++i)
        for (int j = 0; j < bss_count; ++j)
            fading.power_gain[i][j] = sample_nakagami_power(rng, params.nakagami_m);
    return fading;
}

SlotFading unit_fading(int bss_count) {
    SlotFading fading;
    fading.power_gain.assign(bss_count, std::vector<double>(bss_count, 1.0));
    return fading;
}

double compute_sinr_db(const std::vector<int>& active, int k,
                       const LargeScaleRealization& large_scale, const SlotFading& fading,
                       const std::vector<double>& tx_power_dbm, double noise_floor_dbm) {
    if (std::find(active.begin(), active.end(), k) == active.end())
        throw std::invalid_argument("compute_sinr_db: k must be an active transmitter");
    double signal_mw = 0.0;
    double interference_mw = 0.0;
    for (int ap : active) {
        double rx_mw = dbm_to_mw(tx_power_dbm.at(ap) + large_scale.gain_db.at(ap).at(k)) *
                       fading.power_gain.at(ap).at(k);
        if (ap == k)
            signal_mw = rx_mw;
        else
            interference_mw += rx_mw;
    }
    double noise_mw = dbm_to_mw(noise_floor_dbm);
    return 10.0 * std::log10(signal_mw / (interference_mw + noise_mw));
}

bool slot_success(double sinr_db, double capture_threshold_db) {
    return sinr_db >= capture_threshold_db;
}

}  // namespace mapc
