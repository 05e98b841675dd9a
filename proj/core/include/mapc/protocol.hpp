#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mapc/channel.hpp"
#include "mapc/schedule.hpp"
#include "mapc/topology.hpp"

namespace mapc {

// Per-(AP, slot) outcome lattice.
enum class SlotState { Idle, Success, CollisionLoss };

char slot_state_char(SlotState s);               // 'I', 'S', 'C'
SlotState slot_state_from_char(char c);

struct CoordinationMessage {
    enum class Kind { Proposal, Feedback };
    Kind kind = Kind::Proposal;
    int sender_ap = 0;
    int receiver_ap = -1;  // -1 = group broadcast
    int round = 0;
    long sequence = 0;     // global causal order within a TXOP
    std::string body;
    std::optional<std::string> declared_schedule;  // bitstring
};

struct ScoreWeights {
    double success = 1.0;
    double collision = 1.0;
    double idle = 0.5;  // charged per slot in which no group member transmitted
};

struct ScoreResult {
    std::vector<double> per_ap;  // aligned with the schedule vector
    double group = 0.0;
};

// Pure scoring rule over one round's schedules and slot states.
// per-AP = sum over slots (success - collision) minus idle * (group-idle slots).
ScoreResult score_round(const std::vector<TransmissionSchedule>& schedules,
                        const std::vector<std::vector<SlotState>>& states,
                        const ScoreWeights& weights = {});

struct RoundOutcome {
    int round = 0;
    std::vector<int> group;                       // global AP ids, sharing AP first
    std::vector<TransmissionSchedule> schedules;  // aligned with group
    std::vector<std::vector<SlotState>> states;   // [member][slot]
    std::vector<std::vector<double>> sinr_db;     // [member][slot], NaN where Idle
    std::vector<double> scores;                   // aligned with group
    double group_score = 0.0;
    std::vector<CoordinationMessage> messages;    // causal order
    std::vector<int> fallback_members;            // members that hit the TDMA fallback
};

struct TxopConfig {
    int rounds = 18;          // T
    int slots_per_round = 5;  // L
    double slot_duration_us = 80.0;
    ScoreWeights weights;
    int message_char_cap = 1200;
    int parse_retries = 2;
    double cca_dbm = -82.0;  // group formation threshold
};

struct TxopResult {
    int sharing_ap = 0;
    std::vector<int> group;  // sharing AP first, then ascending AP id
    std::vector<RoundOutcome> rounds;
    std::vector<std::string> warnings;
    long contention_backoff_slots = 0;
};

class Agent;  // agent.hpp
struct AblationFlags;

// Sharing AP polls; an agentic neighbor joins when the poll's large-scale
// received power clears the CCA threshold. Result: sharing AP first, then
// member AP ids ascending.
std::vector<int> form_group(const TopologyScenario& scenario,
                            const LargeScaleRealization& large_scale, int sharing_ap,
                            double cca_threshold_dbm);

// One negotiation round: proposal, concurrent shared decisions, transmission,
// SINR evaluation, scoring, feedback. Agents are indexed by global AP id.
// `previous` is the preceding round's outcome (nullptr in round 0); message
// replay and the agents' tool view both read from it.
RoundOutcome run_negotiation_round(int round_index, const std::vector<int>& group,
                                   const std::vector<Agent*>& agents,
                                   const TopologyScenario& scenario,
                                   const LargeScaleRealization& large_scale,
                                   const ChannelParams& channel, const TxopConfig& config,
                                   const AblationFlags& ablations, std::uint64_t master_seed,
                                   const RoundOutcome* previous, long& sequence_counter,
                                   std::vector<std::string>& warnings);

// Full TXOP: contention, group formation, T rounds. Pure function of the
// master seed for non-llm policies.
TxopResult run_txop(const TopologyScenario& scenario, const LargeScaleRealization& large_scale,
                    const ChannelParams& channel, const TxopConfig& config,
                    const std::vector<Agent*>& agents, const AblationFlags& ablations,
                    std::uint64_t master_seed);

}  // namespace mapc
