#include "mapc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mapc/errors.hpp"

namespace mapc {

using ordered_json = nlohmann::ordered_json;

TxopMetrics summarize_txop(const TxopResult& result) {
    TxopMetrics m;
    m.group = result.group;
    m.rounds = static_cast<int>(result.rounds.size());
    if (m.rounds == 0) return m;
    m.slots_per_round = static_cast<int>(result.rounds.front().schedules.front().slots.size());
    const long total_slots = static_cast<long>(m.rounds) * m.slots_per_round;

    std::vector<long> member_success(result.group.size(), 0);
    long idle_slots = 0;
    double score_sum = 0.0;
    for (const RoundOutcome& round : result.rounds) {
        score_sum += round.group_score;
        if (!round.fallback_members.empty()) ++m.fallback_rounds;
        for (int s = 0; s < m.slots_per_round; ++s) {
            bool any = false;
            for (std::size_t g = 0; g < round.group.size(); ++g) {
                if (!round.schedules[g].slots[s]) continue;
                any = true;
                ++m.transmissions;
                if (round.states[g][s] == SlotState::Success) {
                    ++m.successes;
                    ++member_success[g];
                } else {
                    ++m.collisions;
                }
            }
            if (!any) ++idle_slots;
        }
    }
    for (std::size_t g = 0; g < result.group.size(); ++g) {
        m.per_ap_throughput.push_back(static_cast<double>(member_success[g]) / total_slots);
        m.total_throughput += m.per_ap_throughput.back();
    }
    m.collision_rate =
        m.transmissions == 0 ? 0.0 : static_cast<double>(m.collisions) / m.transmissions;
    m.idle_rate = static_cast<double>(idle_slots) / total_slots;
    m.mean_group_score = score_sum / m.rounds;
    return m;
}

AggregateStats aggregate(const std::vector<double>& values) {
    AggregateStats stats;
    stats.n = static_cast<int>(values.size());
    if (stats.n == 0) return stats;
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / stats.n;
    if (stats.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
        stats.stddev = std::sqrt(ss / (stats.n - 1));
    }
    return stats;
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string metrics_csv_header() {
    return "scenario,policy,seed,sharing_ap,group_size,total_throughput,collision_rate,"
           "idle_rate,mean_group_score,fallback_rounds";
}

std::string metrics_csv_row(ScenarioKind kind, PolicyKind policy, std::uint64_t seed,
                            const TxopMetrics& metrics) {
    std::ostringstream os;
    os << to_string(kind) << "," << to_string(policy) << "," << seed << ","
       << (metrics.group.empty() ? -1 : metrics.group.front()) << "," << metrics.group.size()
       << "," << fmt6(metrics.total_throughput) << "," << fmt6(metrics.collision_rate) << ","
       << fmt6(metrics.idle_rate) << "," << fmt6(metrics.mean_group_score) << ","
       << metrics.fallback_rounds;
    return os.str();
}

std::string heatmap_csv(const TxopResult& result) {
    std::ostringstream os;
    os << "round,ap,slot,state\n";
    for (const RoundOutcome& round : result.rounds) {
        for (std::size_t g = 0; g < round.group.size(); ++g) {
            for (std::size_t s = 0; s < round.states[g].size(); ++s) {
                os << round.round << "," << round.group[g] << "," << s << ","
                   << slot_state_char(round.states[g][s]) << "\n";
            }
        }
    }
    return os.str();
}

std::string render_round_log(const TxopResult& result, const TopologyScenario& scenario,
                             const ChannelParams& channel, const TxopConfig& config,
                             PolicyKind policy, const AblationFlags& ablations,
                             std::uint64_t seed) {
    ordered_json header;
    header["log"] = "mapc_rounds";
    header["version"] = 1;
    header["scenario_kind"] = to_string(scenario.kind);
    header["bss_count"] = scenario.bss_count;
    header["seed"] = seed;
    header["policy"] = to_string(policy);
    header["sharing_ap"] = result.sharing_ap;
    header["group"] = result.group;
    header["rounds"] = config.rounds;
    header["slots_per_round"] = config.slots_per_round;
    header["slot_duration_us"] = config.slot_duration_us;
    header["weights"] = {{"success", config.weights.success},
                         {"collision", config.weights.collision},
                         {"idle", config.weights.idle}};
    header["capture_threshold_db"] = channel.capture_threshold_db;
    header["ablations"] = {{"no_reflection", ablations.no_reflection},
                           {"no_negotiation", ablations.no_negotiation},
                           {"no_stm", ablations.no_stm},
                           {"no_ltm", ablations.no_ltm}};
    header["contention_backoff_slots"] = result.contention_backoff_slots;
    header["warnings"] = result.warnings;

    std::ostringstream os;
    os << header.dump() << "\n";
    for (const RoundOutcome& round : result.rounds) {
        ordered_json line;
        line["round"] = round.round;
        ordered_json schedules = ordered_json::array();
        ordered_json states = ordered_json::array();
        for (std::size_t g = 0; g < round.group.size(); ++g) {
            schedules.push_back(round.schedules[g].bits());
            std::string st;
            for (SlotState s : round.states[g]) st.push_back(slot_state_char(s));
            states.push_back(st);
        }
        line["schedules"] = schedules;
        line["states"] = states;
        line["scores"] = round.scores;
        line["group_score"] = round.group_score;
        line["fallbacks"] = round.fallback_members;
        os << line.dump() << "\n";
    }
    return os.str();
}

ParsedRoundLog parse_round_log(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    ParsedRoundLog parsed;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw InfeasibleConfiguration(std::string("round log: bad JSON line: ") + e.what());
        }
        if (!have_header) {
            if (j.value("log", "") != "mapc_rounds" || j.value("version", 0) != 1)
                throw InfeasibleConfiguration("round log: missing or unsupported header");
            parsed.kind = scenario_kind_from_string(j.at("scenario_kind").get<std::string>());
            parsed.bss_count = j.at("bss_count").get<int>();
            parsed.seed = j.at("seed").get<std::uint64_t>();
            parsed.policy = policy_kind_from_string(j.at("policy").get<std::string>());
            parsed.config.rounds = j.at("rounds").get<int>();
            parsed.config.slots_per_round = j.at("slots_per_round").get<int>();
            parsed.config.slot_duration_us = j.at("slot_duration_us").get<double>();
            parsed.config.weights.success = j.at("weights").at("success").get<double>();
            parsed.config.weights.collision = j.at("weights").at("collision").get<double>();
            parsed.config.weights.idle = j.at("weights").at("idle").get<double>();
            parsed.result.sharing_ap = j.at("sharing_ap").get<int>();
            parsed.result.group = j.at("group").get<std::vector<int>>();
            parsed.result.contention_backoff_slots =
                j.at("contention_backoff_slots").get<long>();
            parsed.result.warnings = j.at("warnings").get<std::vector<std::string>>();
            have_header = true;
            continue;
        }
        RoundOutcome round;
        round.round = j.at("round").get<int>();
        round.group = parsed.result.group;
        auto schedules = j.at("schedules").get<std::vector<std::string>>();
        auto states = j.at("states").get<std::vector<std::string>>();
        if (schedules.size() != parsed.result.group.size() || states.size() != schedules.size())
            throw InfeasibleConfiguration("round log: ragged round line");
        for (std::size_t g = 0; g < schedules.size(); ++g) {
            round.schedules.push_back(
                TransmissionSchedule::from_bits(parsed.result.group[g], schedules[g]));
            std::vector<SlotState> row;
            for (char c : states[g]) row.push_back(slot_state_from_char(c));
            if (row.size() != round.schedules.back().slots.size())
                throw InfeasibleConfiguration("round log: states/schedule length mismatch");
            round.states.push_back(std::move(row));
        }
        round.scores = j.at("scores").get<std::vector<double>>();
        round.group_score = j.at("group_score").get<double>();
        round.fallback_members = j.at("fallbacks").get<std::vector<int>>();
        parsed.result.rounds.push_back(std::move(round));
    }
    if (!have_header) throw InfeasibleConfiguration("round log: empty input");
    return parsed;
}

}  // namespace mapc
