#include "mapc/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace mapc {

char slot_state_char(SlotState s) {
    switch (s) {
        case SlotState::Idle: return 'I';
        case SlotState::Success: return 'S';
        case SlotState::CollisionLoss: return 'C';
    }
    throw std::invalid_argument("slot_state_char: unknown state");
}

SlotState slot_state_from_char(char c) {
    switch (c) {
        case 'I': return SlotState::Idle;
        case 'S': return SlotState::Success;
        case 'C': return SlotState::CollisionLoss;
    }
    throw std::invalid_argument(std::string("slot_state_from_char: unknown char '") + c + "'");
}

ScoreResult score_round(const std::vector<TransmissionSchedule>& schedules,
                        const std::vector<std::vector<SlotState>>& states,
                        const ScoreWeights& weights) {
    if (schedules.size() != states.size())
        throw std::invalid_argument("score_round: schedules/states size mismatch");
    if (schedules.empty()) return {};
    const std::size_t num_slots = schedules.front().slots.size();
    for (std::size_t i = 0; i < schedules.size(); ++i) {
        if (schedules[i].slots.size() != num_slots || states[i].size() != num_slots)
            throw std::invalid_argument("score_round: ragged slot dimensions");
        for (std::size_t s = 0; s < num_slots; ++s) {
            bool tx = schedules[i].slots[s] != 0;
            bool idle = states[i][s] == SlotState::Idle;
            if (tx == idle)
                throw std::invalid_argument("score_round: states inconsistent with schedules");
        }
    }

    int idle_slots = 0;
    for (std::size_t s = 0; s < num_slots; ++s) {
        bool any = false;
        for (const auto& sched : schedules) any = any || sched.slots[s] != 0;
        if (!any) ++idle_slots;
    }

    ScoreResult result;
    result.per_ap.resize(schedules.size(), 0.0);
    for (std::size_t i = 0; i < schedules.size(); ++i) {
        double score = 0.0;
        for (std::size_t s = 0; s < num_slots; ++s) {
            if (states[i][s] == SlotState::Success) score += weights.success;
            if (states[i][s] == SlotState::CollisionLoss) score -= weights.collision;
        }
        score -= weights.idle * idle_slots;
        result.per_ap[i] = score;
        result.group += score;
    }
    return result;
}

std::vector<int> form_group(const TopologyScenario& scenario,
                            const LargeScaleRealization& large_scale, int sharing_ap,
                            double cca_threshold_dbm) {
    if (sharing_ap < 0 || sharing_ap >= scenario.bss_count)
        throw std::invalid_argument("form_group: sharing_ap out of range");
    std::vector<int> group{sharing_ap};
    for (int j = 0; j < scenario.bss_count; ++j) {
        if (j == sharing_ap) continue;
        double rx_dbm = scenario.tx_power_dbm[sharing_ap] + large_scale.ap_gain_db[sharing_ap][j];
        if (rx_dbm >= cca_threshold_dbm) group.push_back(j);
    }
    std::sort(group.begin() + 1, group.end());
    return group;
}

}  // namespace mapc
