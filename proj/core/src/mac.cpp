#include "mapc/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mapc/errors.hpp"

namespace mapc {

void MacParams::validate() const {
    if (!(slot_us > 0) || !(difs_us >= 0) || !(packet_airtime_us > 0))
        throw std::invalid_argument("MacParams: timings must be positive");
    if (cw_min < 0 || cw_max < cw_min)
        throw std::invalid_argument("MacParams: need 0 <= cw_min <= cw_max");
    if (!std::isfinite(cca_dbm)) throw std::invalid_argument("MacParams: cca must be finite");
}

ContentionResult contend(const std::vector<int>& contenders, const MacParams& params,
                         RngStream& rng) {
    params.validate();
    if (contenders.empty()) throw std::invalid_argument("contend: no contenders");
    int cw = params.cw_min;
    for (int round = 0; round < 64; ++round) {
        long best = std::numeric_limits<long>::max();
        int best_ap = -1;
        int best_count = 0;
        for (int ap : contenders) {
            long draw = static_cast<long>(rng.uniform_below(static_cast<std::uint64_t>(cw) + 1));
            if (draw < best) {
                best = draw;
                best_ap = ap;
                best_count = 1;
            } else if (draw == best) {
                ++best_count;
            }
        }
        if (best_count == 1) return {best_ap, best, round};
        cw = std::min(cw * 2 + 1, params.cw_max);
    }
    throw ContentionDeadlock("contend: no unique minimum after 64 rounds");
}

namespace {

struct Packet {
    int ap = 0;
    double start = 0.0;
    double end = 0.0;
};

constexpr double kNever = std::numeric_limits<double>::infinity();

}  // namespace

LegacyStats run_legacy_traffic(const TopologyScenario& scenario,
                               const LargeScaleRealization& large_scale,
                               const ChannelParams& channel, const LegacyConfig& config,
                               const std::vector<int>& participants, std::uint64_t master_seed) {
    config.mac.validate();
    channel.validate();
    const int K = scenario.bss_count;
    if (participants.empty()) throw std::invalid_argument("run_legacy_traffic: no participants");
    for (int ap : participants)
        if (ap < 0 || ap >= K)
            throw std::invalid_argument("run_legacy_traffic: participant out of range");
    if (!config.tx_power_dbm.empty() && static_cast<int>(config.tx_power_dbm.size()) != K)
        throw std::invalid_argument("run_legacy_traffic: power override must cover every AP");

    std::vector<double> power(K);
    for (int i = 0; i < K; ++i)
        power[i] = config.tx_power_dbm.empty() ? scenario.tx_power_dbm[i]
                                               : config.tx_power_dbm[i];

    // audibility is frozen large-scale only; fading applies to data, not sensing
    std::vector<std::vector<bool>> hears(K, std::vector<bool>(K, false));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            if (i != j)
                hears[i][j] =
                    power[j] + large_scale.ap_gain_db[j][i] >= config.sense_threshold_dbm;

    RngStream rng(master_seed, {RngStream::tag("legacy")});

    enum class Mode { Counting, Transmitting };
    struct ApState {
        Mode mode = Mode::Counting;
        double difs_left = 0.0;
        double backoff_us = 0.0;
        int cw = 0;
        double tx_end = kNever;
    };
    std::vector<ApState> state(K);
    const double slot = config.mac.slot_us;
    const double horizon = config.horizon_us;

    std::vector<bool> active(K, false);
    for (int ap : participants) active[ap] = true;
    for (int ap : participants) {
        state[ap].difs_left = config.mac.difs_us;
        state[ap].cw = config.mac.cw_min;
        state[ap].backoff_us =
            static_cast<double>(rng.uniform_below(static_cast<std::uint64_t>(state[ap].cw) + 1)) *
            slot;
    }

    std::vector<Packet> packets;      // every transmission ever started
    std::vector<int> ongoing;         // indices into packets
    LegacyStats stats;
    stats.success_airtime_us.assign(K, 0.0);
    stats.packets.assign(K, 0);
    stats.failures.assign(K, 0);
    stats.utilization.assign(K, 0.0);

    std::vector<double> boundaries;  // reservation edges punctuate the spans
    for (const ReservedInterval& res : config.reservations) {
        if (res.end_us <= res.start_us) continue;
        boundaries.push_back(res.start_us);
        boundaries.push_back(res.end_us);
    }
    std::sort(boundaries.begin(), boundaries.end());

    auto sensed_busy = [&](int i, double t) {
        for (int idx : ongoing) {
            const Packet& p = packets[idx];
            if (p.ap != i && hears[i][p.ap] && p.start <= t && p.end > t) return true;
        }
        for (const ReservedInterval& res : config.reservations) {
            if (res.start_us <= t && res.end_us > t) {
                if (res.source_ap == i) continue;
                if (res.source_ap < 0 || res.source_ap >= K || hears[i][res.source_ap])
                    return true;
            }
        }
        return false;
    };

    auto finish_packet = [&](int idx) {
        const Packet& p = packets[idx];
        // concurrent set: anything that shared airtime with this packet
        std::vector<int> interferers;
        for (std::size_t q = 0; q < packets.size(); ++q) {
            if (static_cast<int>(q) == idx) continue;
            if (packets[q].start < p.end && packets[q].end > p.start)
                interferers.push_back(packets[q].ap);
        }
        std::sort(interferers.begin(), interferers.end());
        interferers.erase(std::unique(interferers.begin(), interferers.end()),
                          interferers.end());
        double h_signal = rng.nakagami_power(channel.nakagami_m);
        double signal_mw =
            dbm_to_mw(power[p.ap] + large_scale.gain_db[p.ap][p.ap]) * h_signal;
        double interference_mw = 0.0;
        for (int q : interferers) {
            double h = rng.nakagami_power(channel.nakagami_m);
            interference_mw += dbm_to_mw(power[q] + large_scale.gain_db[q][p.ap]) * h;
        }
        double sinr_db = mw_to_dbm(signal_mw) -
                         mw_to_dbm(interference_mw + dbm_to_mw(channel.noise_floor_dbm));
        ApState& st = state[p.ap];
        if (slot_success(sinr_db, channel.capture_threshold_db)) {
            stats.success_airtime_us[p.ap] += p.end - p.start;
            st.cw = config.mac.cw_min;
        } else {
            ++stats.failures[p.ap];
            st.cw = std::min(st.cw * 2 + 1, config.mac.cw_max);
        }
        st.mode = Mode::Counting;
        st.tx_end = kNever;
        st.difs_left = config.mac.difs_us;
        st.backoff_us =
            static_cast<double>(rng.uniform_below(static_cast<std::uint64_t>(st.cw) + 1)) * slot;
    };

    double t = 0.0;
    while (t < horizon) {
        double t_next = horizon;
        for (double b : boundaries)
            if (b > t) {
                t_next = std::min(t_next, b);
                break;
            }
        for (int ap : participants)
            if (state[ap].mode == Mode::Transmitting) t_next = std::min(t_next, state[ap].tx_end);
        std::vector<char> busy_now(K, 0);
        for (int ap : participants)
            if (state[ap].mode == Mode::Counting) {
                busy_now[ap] = sensed_busy(ap, t) ? 1 : 0;
                if (!busy_now[ap])
                    t_next = std::min(t_next, t + state[ap].difs_left + state[ap].backoff_us);
            }
        if (t_next <= t) throw std::logic_error("run_legacy_traffic: stalled event loop");

        // settle the span [t, t_next): per-AP channel state is constant here
        std::vector<int> starters;
        for (int ap : participants) {
            ApState& st = state[ap];
            if (st.mode != Mode::Counting) continue;
            if (busy_now[ap]) {
                st.difs_left = config.mac.difs_us;  // freeze backoff, restart DIFS
                continue;
            }
            double span = t_next - t;
            double use = std::min(span, st.difs_left);
            st.difs_left -= use;
            span -= use;
            double consumed = std::min(span, st.backoff_us);
            st.backoff_us -= consumed;
            if (st.difs_left == 0.0 && st.backoff_us == 0.0) starters.push_back(ap);
        }
        for (int ap : starters) {
            ApState& st = state[ap];
            double end = t_next + config.mac.packet_airtime_us;
            if (end > horizon) {
                // not enough airtime left; hold off until the horizon
                st.backoff_us = kNever;
                continue;
            }
            st.mode = Mode::Transmitting;
            st.tx_end = end;
            ++stats.packets[ap];
            packets.push_back({ap, t_next, end});
            ongoing.push_back(static_cast<int>(packets.size()) - 1);
        }
        for (int ap : participants) {
            ApState& st = state[ap];
            if (st.mode == Mode::Transmitting && st.tx_end == t_next) {
                int idx = -1;
                for (int o : ongoing)
                    if (packets[o].ap == ap && packets[o].end == t_next) idx = o;
                ongoing.erase(std::remove(ongoing.begin(), ongoing.end(), idx), ongoing.end());
                finish_packet(idx);
            }
        }
        t = t_next;
    }

    for (int ap : participants) {
        stats.utilization[ap] = stats.success_airtime_us[ap] / horizon;
        stats.total_utilization += stats.utilization[ap];
    }
    return stats;
}

double obss_pd_tx_power_cap(const ObssPdConfig& pd, double cca_dbm) {
    double cap = pd.reference_tx_dbm - (pd.pd_threshold_dbm - cca_dbm);
    return std::min(pd.requested_tx_dbm, cap);
}

LegacyStats run_obss_pd_baseline(const TopologyScenario& scenario,
                                 const LargeScaleRealization& large_scale,
                                 const ChannelParams& channel, const LegacyConfig& config,
                                 const ObssPdConfig& pd, const std::vector<int>& participants,
                                 std::uint64_t master_seed) {
    LegacyConfig adjusted = config;
    adjusted.sense_threshold_dbm = std::max(config.mac.cca_dbm, pd.pd_threshold_dbm);
    double cap = obss_pd_tx_power_cap(pd, config.mac.cca_dbm);
    adjusted.tx_power_dbm.assign(scenario.bss_count, cap);
    return run_legacy_traffic(scenario, large_scale, channel, adjusted, participants,
                              master_seed);
}

ObssPdSweepResult sweep_obss_pd(const TopologyScenario& scenario,
                                const LargeScaleRealization& large_scale,
                                const ChannelParams& channel, const LegacyConfig& config,
                                const std::vector<int>& participants,
                                std::uint64_t master_seed) {
    ObssPdSweepResult result;
    for (double threshold = -82.0; threshold <= -62.0 + 1e-9; threshold += 4.0) {
        for (double req = 5.0; req <= 20.0 + 1e-9; req += 5.0) {
            ObssPdConfig pd;
            pd.pd_threshold_dbm = threshold;
            pd.requested_tx_dbm = req;
            LegacyStats stats = run_obss_pd_baseline(scenario, large_scale, channel, config, pd,
                                                     participants, master_seed);
            result.grid.push_back({threshold, req, stats.total_utilization});
        }
    }
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        if (result.best_index < 0) {
            result.best_index = static_cast<int>(i);
            continue;
        }
        const ObssPdSweepPoint& best = result.grid[result.best_index];
        const ObssPdSweepPoint& cur = result.grid[i];
        bool better = cur.total_utilization > best.total_utilization;
        if (cur.total_utilization == best.total_utilization) {
            better = cur.power_dbm < best.power_dbm ||
                     (cur.power_dbm == best.power_dbm && cur.threshold_dbm < best.threshold_dbm);
        }
        if (better) result.best_index = static_cast<int>(i);
    }
    return result;
}

}  // namespace mapc
