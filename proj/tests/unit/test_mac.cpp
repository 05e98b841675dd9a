#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mapc/errors.hpp"
#include "mapc/mac.hpp"
#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

using namespace mapc;

namespace {

// two BSSs with strong own links; cross coupling set per test
TopologyScenario two_bss() {
    TopologyScenario s;
    s.bss_count = 2;
    s.tx_power_dbm = {20.0, 20.0};
    return s;
}

LargeScaleRealization coupled(double cross_sta_db, double cross_ap_db) {
    LargeScaleRealization ls;
    ls.gain_db = {{-50.0, cross_sta_db}, {cross_sta_db, -50.0}};
    ls.ap_gain_db = {{0.0, cross_ap_db}, {cross_ap_db, 0.0}};
    return ls;
}

}  // namespace

TEST_CASE("mac params are validated") {
    MacParams p;
    CHECK_NOTHROW(p.validate());
    SUBCASE("negative slot") {
        p.slot_us = 0.0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
    SUBCASE("cw order") {
        p.cw_min = 31;
        p.cw_max = 15;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
    SUBCASE("nan cca") {
        p.cca_dbm = std::nan("");
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
}

TEST_CASE("contention picks a unique minimum deterministically") {
    MacParams p;
    RngStream a(7, {RngStream::tag("contend")});
    RngStream b(7, {RngStream::tag("contend")});
    auto ra = contend({0, 1, 2}, p, a);
    auto rb = contend({0, 1, 2}, p, b);
    CHECK(ra.winner_ap == rb.winner_ap);
    CHECK(ra.winning_backoff == rb.winning_backoff);
    CHECK(ra.redraw_rounds == rb.redraw_rounds);
    CHECK(ra.winner_ap >= 0);
    CHECK(ra.winner_ap <= 2);
    CHECK(ra.winning_backoff >= 0);
    CHECK(ra.winning_backoff <= p.cw_min);

    CHECK_THROWS_AS(contend({}, p, a), std::invalid_argument);

    RngStream c(7, {RngStream::tag("solo")});
    auto rc = contend({4}, p, c);
    CHECK(rc.winner_ap == 4);
    CHECK(rc.redraw_rounds == 0);
}

TEST_CASE("contention is fair across contenders") {
    MacParams p;
    int wins[3] = {0, 0, 0};
    const int trials = 3000;
    for (int i = 0; i < trials; ++i) {
        RngStream rng(11, {RngStream::tag("fairness"), static_cast<std::uint64_t>(i)});
        wins[contend({0, 1, 2}, p, rng).winner_ap]++;
    }
    double expect = trials / 3.0;
    double chi2 = 0.0;
    for (int w : wins) chi2 += (w - expect) * (w - expect) / expect;
    CHECK(chi2 < 13.82);  // 2 dof, p = 0.001
}

TEST_CASE("degenerate zero windows deadlock instead of spinning") {
    MacParams p;
    p.cw_min = 0;
    p.cw_max = 0;
    RngStream rng(3, {RngStream::tag("deadlock")});
    CHECK_THROWS_AS(contend({0, 1}, p, rng), ContentionDeadlock);
}

TEST_CASE("saturated single AP matches the DIFS+backoff+airtime cycle") {
    auto scenario = two_bss();
    auto ls = coupled(-130.0, -130.0);
    ChannelParams channel;
    LegacyConfig config;

    auto stats = run_legacy_traffic(scenario, ls, channel, config, {0}, 5);
    // cycle = 34 + E[backoff]*9 + 400 = 501.5 us -> utilization ~ 400/501.5
    double expected = 400.0 / 501.5;
    CHECK(stats.utilization[0] == doctest::Approx(expected).epsilon(0.02));
    CHECK(stats.failures[0] == 0);
    CHECK(stats.packets[0] > 300);
    CHECK(stats.total_utilization == doctest::Approx(stats.utilization[0]));
    CHECK(stats.utilization[1] == 0.0);

    SUBCASE("deterministic in the seed") {
        auto again = run_legacy_traffic(scenario, ls, channel, config, {0}, 5);
        CHECK(again.success_airtime_us == stats.success_airtime_us);
        CHECK(again.packets == stats.packets);
        bool any_diff = false;
        for (std::uint64_t seed = 6; seed < 10; ++seed) {
            auto other = run_legacy_traffic(scenario, ls, channel, config, {0}, seed);
            any_diff |= other.packets != stats.packets;
        }
        CHECK(any_diff);
    }
}

TEST_CASE("isolated BSSs run at full rate in parallel") {
    auto scenario = two_bss();
    auto ls = coupled(-130.0, -130.0);  // inaudible and harmless
    ChannelParams channel;
    LegacyConfig config;
    auto stats = run_legacy_traffic(scenario, ls, channel, config, {0, 1}, 9);
    double expected = 400.0 / 501.5;
    CHECK(stats.utilization[0] == doctest::Approx(expected).epsilon(0.03));
    CHECK(stats.utilization[1] == doctest::Approx(expected).epsilon(0.03));
    CHECK(stats.failures[0] + stats.failures[1] == 0);
}

TEST_CASE("mutually audible BSSs share the medium") {
    auto scenario = two_bss();
    auto ls = coupled(-60.0, -60.0);  // 20 - 60 = -40 dBm, well above CCA
    ChannelParams channel;
    LegacyConfig config;
    auto stats = run_legacy_traffic(scenario, ls, channel, config, {0, 1}, 9);
    CHECK(stats.total_utilization > 0.55);
    CHECK(stats.total_utilization < 0.95);
    CHECK(stats.utilization[0] > 0.2);
    CHECK(stats.utilization[1] > 0.2);
    // neither side can hog a shared medium
    CHECK(stats.utilization[0] < 0.65);
    CHECK(stats.utilization[1] < 0.65);
}

TEST_CASE("reservations silence APs that can hear the source") {
    auto scenario = two_bss();
    ChannelParams channel;
    LegacyConfig config;

    SUBCASE("audible source blocks the whole horizon") {
        auto ls = coupled(-130.0, -100.0);  // 20 - 100 = -80 dBm >= -82: audible
        config.reservations = {{0.0, config.horizon_us, 1}};
        auto stats = run_legacy_traffic(scenario, ls, channel, config, {0}, 4);
        CHECK(stats.packets[0] == 0);
        CHECK(stats.total_utilization == 0.0);
    }
    SUBCASE("inaudible source is ignored") {
        auto ls = coupled(-130.0, -130.0);
        config.reservations = {{0.0, config.horizon_us, 1}};
        auto stats = run_legacy_traffic(scenario, ls, channel, config, {0}, 4);
        CHECK(stats.utilization[0] == doctest::Approx(400.0 / 501.5).epsilon(0.02));
    }
    SUBCASE("out-of-range source blocks everyone") {
        auto ls = coupled(-130.0, -130.0);
        config.reservations = {{0.0, config.horizon_us / 2, -1}};
        auto stats = run_legacy_traffic(scenario, ls, channel, config, {0}, 4);
        CHECK(stats.utilization[0] == doctest::Approx(0.5 * 400.0 / 501.5).epsilon(0.05));
    }
}

TEST_CASE("legacy runs reject bad inputs") {
    auto scenario = two_bss();
    auto ls = coupled(-130.0, -130.0);
    ChannelParams channel;
    LegacyConfig config;
    CHECK_THROWS_AS(run_legacy_traffic(scenario, ls, channel, config, {}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_legacy_traffic(scenario, ls, channel, config, {2}, 1),
                    std::invalid_argument);
    config.tx_power_dbm = {20.0};  // wrong arity
    CHECK_THROWS_AS(run_legacy_traffic(scenario, ls, channel, config, {0}, 1),
                    std::invalid_argument);
}

TEST_CASE("obss/pd power cap trades a dB of power per dB of deafness") {
    ObssPdConfig pd;
    CHECK(obss_pd_tx_power_cap(pd, -82.0) == doctest::Approx(20.0));
    pd.pd_threshold_dbm = -72.0;
    CHECK(obss_pd_tx_power_cap(pd, -82.0) == doctest::Approx(10.0));
    pd.pd_threshold_dbm = -62.0;
    CHECK(obss_pd_tx_power_cap(pd, -82.0) == doctest::Approx(0.0));
    pd.requested_tx_dbm = 5.0;
    pd.pd_threshold_dbm = -72.0;
    CHECK(obss_pd_tx_power_cap(pd, -82.0) == doctest::Approx(5.0));
}

TEST_CASE("obss/pd at the legacy threshold reproduces the legacy run exactly") {
    auto scenario = two_bss();
    auto ls = coupled(-95.0, -75.0);
    ChannelParams channel;
    LegacyConfig config;
    ObssPdConfig pd;  // -82 / 20 / 20

    auto legacy = run_legacy_traffic(scenario, ls, channel, config, {0, 1}, 12);
    auto reuse = run_obss_pd_baseline(scenario, ls, channel, config, pd, {0, 1}, 12);
    CHECK(reuse.success_airtime_us == legacy.success_airtime_us);
    CHECK(reuse.packets == legacy.packets);
    CHECK(reuse.failures == legacy.failures);
}

TEST_CASE("obss/pd sweep covers the full grid and finds a reuse win") {
    auto scenario = two_bss();
    // audible at -82 but with plenty of SINR margin: raising pd unlocks reuse
    auto ls = coupled(-110.0, -75.0);
    ChannelParams channel;
    LegacyConfig config;

    auto sweep = sweep_obss_pd(scenario, ls, channel, config, {0, 1}, 12);
    CHECK(sweep.grid.size() == 24);  // 6 thresholds x 4 powers
    REQUIRE(sweep.best_index >= 0);
    REQUIRE(sweep.best_index < static_cast<int>(sweep.grid.size()));
    for (const auto& pt : sweep.grid) {
        CHECK(pt.threshold_dbm >= -82.0);
        CHECK(pt.threshold_dbm <= -62.0);
        CHECK(pt.power_dbm >= 5.0);
        CHECK(pt.power_dbm <= 20.0);
        CHECK(pt.total_utilization <= sweep.grid[sweep.best_index].total_utilization);
    }

    auto legacy = run_legacy_traffic(scenario, ls, channel, config, {0, 1}, 12);
    CHECK(sweep.grid[sweep.best_index].total_utilization >=
          legacy.total_utilization - 1e-12);
}
