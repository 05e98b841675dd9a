#include "mapc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "mapc/errors.hpp"
#include "mapc/rng.hpp"

namespace mapc {

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::CoTdmaFavored: return "co_tdma_favored";
        case ScenarioKind::CoSrFavored: return "co_sr_favored";
        case ScenarioKind::Random: return "random";
    }
    throw std::invalid_argument("to_string: unknown ScenarioKind");
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
    if (name == "co_tdma_favored" || name == "co_tdma" || name == "co-tdma")
        return ScenarioKind::CoTdmaFavored;
    if (name == "co_sr_favored" || name == "co_sr" || name == "co-sr")
        return ScenarioKind::CoSrFavored;
    if (name == "random") return ScenarioKind::Random;
    throw InfeasibleConfiguration("unknown scenario kind: " + std::string(name));
}

double pairwise_distance(const NodePosition& a, const NodePosition& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

bool ap_spacing_ok(const std::vector<NodePosition>& aps, const NodePosition& candidate,
                   double lo, double hi) {
    for (const auto& ap : aps) {
        double d = pairwise_distance(ap, candidate);
        if (d < lo || d > hi) return false;
    }
    return true;
}

std::vector<NodePosition> place_aps(ScenarioKind kind, int k, const TopologyParams& p,
                                    RngStream& rng) {
    // Keep APs off the arena edge so the STA annulus always fits.
    const double margin = p.sta_max_m;
    const double lo_xy = margin;
    const double hi_xy = p.arena_m - margin;
    if (hi_xy <= lo_xy)
        throw InfeasibleConfiguration("arena too small for STA placement margin");

    double pair_lo = 0.0, pair_hi = 0.0;
    switch (kind) {
        case ScenarioKind::CoTdmaFavored:
            pair_lo = p.tdma_ap_min_m;
            pair_hi = p.tdma_ap_max_m;
            break;
        case ScenarioKind::CoSrFavored:
            pair_lo = p.sr_ap_min_m;
            pair_hi = p.sr_ap_max_m;
            break;
        case ScenarioKind::Random:
            pair_lo = p.random_ap_min_m;
            pair_hi = std::numeric_limits<double>::infinity();
            break;
    }

    std::vector<NodePosition> aps;
    aps.push_back({rng.uniform(lo_xy, hi_xy), rng.uniform(lo_xy, hi_xy)});
    while (static_cast<int>(aps.size()) < k) {
        bool placed = false;
        for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
            NodePosition candidate;
            if (kind == ScenarioKind::Random) {
                candidate = {rng.uniform(lo_xy, hi_xy), rng.uniform(lo_xy, hi_xy)};
            } else {
                // sample in the target annulus around a random existing AP,
                // then check the remaining pairwise constraints
                const auto& anchor = aps[rng.uniform_below(aps.size())];
                double r = rng.uniform(pair_lo, pair_hi);
                double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
                candidate = {anchor.x + r * std::cos(ang), anchor.y + r * std::sin(ang)};
            }
            if (candidate.x < lo_xy || candidate.x > hi_xy || candidate.y < lo_xy ||
                candidate.y > hi_xy)
                continue;
            if (!ap_spacing_ok(aps, candidate, pair_lo, pair_hi)) continue;
            aps.push_back(candidate);
            placed = true;
            break;
        }
        if (!placed)
            throw InfeasibleConfiguration("AP placement failed for kind " + to_string(kind) +
                                          " with K=" + std::to_string(k));
    }
    return aps;
}

std::vector<NodePosition> place_stas(ScenarioKind kind, const std::vector<NodePosition>& aps,
                                     const TopologyParams& p, RngStream& rng) {
    const int k = static_cast<int>(aps.size());
    std::vector<NodePosition> stas;
    for (int i = 0; i < k; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
            double r = rng.uniform(p.sta_min_m, p.sta_max_m);
            double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            NodePosition sta{aps[i].x + r * std::cos(ang), aps[i].y + r * std::sin(ang)};
            if (sta.x < 0.0 || sta.x > p.arena_m || sta.y < 0.0 || sta.y > p.arena_m) continue;

            bool ok = true;
            for (int j = 0; j < k && ok; ++j) {
                if (j == i) continue;
                double cross = pairwise_distance(aps[j], sta);
                if (cross < p.min_separation_m) ok = false;
                if (kind == ScenarioKind::CoTdmaFavored &&
                    cross > std::min(p.tdma_cross_ratio * r, p.tdma_cross_cap_m))
                    ok = false;
            }
            for (const auto& other : stas) {
                if (pairwise_distance(other, sta) < p.min_separation_m) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            stas.push_back(sta);
            placed = true;
            break;
        }
        if (!placed)
            throw InfeasibleConfiguration("STA placement failed for kind " + to_string(kind));
    }
    return stas;
}

}  // namespace

TopologyScenario generate_scenario(ScenarioKind kind, int bss_count, std::uint64_t seed,
                                   const TopologyParams& params) {
    if (bss_count < 2)
        throw InfeasibleConfiguration("generate_scenario: bss_count must be >= 2, got " +
                                      std::to_string(bss_count));
    RngStream rng(seed, {RngStream::tag("topology"), static_cast<std::uint64_t>(kind),
                         static_cast<std::uint64_t>(bss_count)});

    // Whole-layout retries: STA constraints can be unsatisfiable for an
    // unlucky AP layout (Co-TDMA cross caps), so redraw everything.
    for (int layout = 0; layout < 64; ++layout) {
        try {
            auto aps = place_aps(kind, bss_count, params, rng);
            auto stas = place_stas(kind, aps, params, rng);
            TopologyScenario scenario;
            scenario.bss_count = bss_count;
            scenario.ap_positions = std::move(aps);
            scenario.sta_positions = std::move(stas);
            scenario.tx_power_dbm.assign(bss_count, params.tx_power_dbm);
            scenario.kind = kind;
            scenario.seed = seed;
            return scenario;
        } catch (const InfeasibleConfiguration&) {
            if (layout == 63) throw;
        }
    }
    throw InfeasibleConfiguration("generate_scenario: unreachable");
}

std::string serialize_scenario(const TopologyScenario& s) {
    nlohmann::ordered_json j;
    j["bss_count"] = s.bss_count;
    j["scenario_kind"] = to_string(s.kind);
    j["seed"] = s.seed;
    j["tx_power_dbm"] = s.tx_power_dbm;
    auto points = [](const std::vector<NodePosition>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& pt : v) arr.push_back({{"x", pt.x}, {"y", pt.y}});
        return arr;
    };
    j["ap_positions"] = points(s.ap_positions);
    j["sta_positions"] = points(s.sta_positions);
    return j.dump();
}

TopologyScenario parse_scenario(const std::string& text) {
    try {
        auto j = nlohmann::ordered_json::parse(text);
        TopologyScenario s;
        s.bss_count = j.at("bss_count").get<int>();
        s.kind = scenario_kind_from_string(j.at("scenario_kind").get<std::string>());
        s.seed = j.at("seed").get<std::uint64_t>();
        s.tx_power_dbm = j.at("tx_power_dbm").get<std::vector<double>>();
        auto points = [](const nlohmann::ordered_json& arr) {
            std::vector<NodePosition> v;
            for (const auto& pt : arr) v.push_back({pt.at("x").get<double>(), pt.at("y").get<double>()});
            return v;
        };
        s.ap_positions = points(j.at("ap_positions"));
        s.sta_positions = points(j.at("sta_positions"));
        if (static_cast<int>(s.ap_positions.size()) != s.bss_count ||
            static_cast<int>(s.sta_positions.size()) != s.bss_count ||
            static_cast<int>(s.tx_power_dbm.size()) != s.bss_count)
            throw InfeasibleConfiguration("parse_scenario: vector sizes disagree with bss_count");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InfeasibleConfiguration(std::string("parse_scenario: malformed document: ") + e.what());
    }
}

}  // namespace mapc
