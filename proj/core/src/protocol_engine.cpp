#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mapc/agent.hpp"
#include "mapc/mac.hpp"
#include "mapc/protocol.hpp"

namespace mapc {
namespace {

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string states_string(const std::vector<SlotState>& states) {
    std::string out;
    for (SlotState s : states) out.push_back(slot_state_char(s));
    return out;
}

// Scoreboard summary broadcast by the sharing AP after each round.
std::string feedback_body(const RoundOutcome& outcome) {
    int idle = 0;
    const std::size_t num_slots = outcome.schedules.front().slots.size();
    for (std::size_t s = 0; s < num_slots; ++s) {
        bool any = false;
        for (const auto& sched : outcome.schedules) any = any || sched.slots[s] != 0;
        if (!any) ++idle;
    }
    std::ostringstream os;
    os << "outcome r" << (outcome.round + 1) << ":";
    for (std::size_t g = 0; g < outcome.group.size(); ++g)
        os << " ap" << outcome.group[g] << "=" << outcome.schedules[g].bits() << "/"
           << states_string(outcome.states[g]) << " score=" << fmt1(outcome.scores[g]);
    os << " group=" << fmt1(outcome.group_score) << " idle=" << idle;
    return os.str();
}

CoordinationMessage make_message(CoordinationMessage::Kind kind, int sender, int round,
                                 long& sequence, std::string body,
                                 std::optional<std::string> declared, int char_cap,
                                 std::vector<std::string>& warnings) {
    if (char_cap > 0 && body.size() > static_cast<std::size_t>(char_cap)) {
        std::ostringstream os;
        os << "round " << (round + 1) << ": message from ap" << sender << " truncated to "
           << char_cap << " chars";
        warnings.push_back(os.str());
        body.resize(char_cap);
    }
    CoordinationMessage msg;
    msg.kind = kind;
    msg.sender_ap = sender;
    msg.receiver_ap = -1;
    msg.round = round;
    msg.sequence = sequence++;
    msg.body = std::move(body);
    msg.declared_schedule = std::move(declared);
    return msg;
}

}  // namespace

RoundOutcome run_negotiation_round(int round_index, const std::vector<int>& group,
                                   const std::vector<Agent*>& agents,
                                   const TopologyScenario& scenario,
                                   const LargeScaleRealization& large_scale,
                                   const ChannelParams& channel, const TxopConfig& config,
                                   const AblationFlags& ablations, std::uint64_t master_seed,
                                   const RoundOutcome* previous, long& sequence_counter,
                                   std::vector<std::string>& warnings) {
    const int n = static_cast<int>(group.size());
    const int L = config.slots_per_round;
    if (n == 0) throw std::invalid_argument("run_negotiation_round: empty group");
    for (int ap : group) {
        if (ap < 0 || ap >= static_cast<int>(agents.size()) || agents[ap] == nullptr)
            throw std::invalid_argument("run_negotiation_round: missing agent for group member");
    }

    RoundOutcome outcome;
    outcome.round = round_index;
    outcome.group = group;

    std::vector<RngStream> agent_rngs;
    agent_rngs.reserve(n);
    for (int g = 0; g < n; ++g)
        agent_rngs.emplace_back(master_seed,
                                std::initializer_list<std::uint64_t>{
                                    RngStream::tag("agent"), static_cast<std::uint64_t>(group[g]),
                                    static_cast<std::uint64_t>(round_index)});

    std::vector<RoundContext> ctxs(n);
    for (int g = 0; g < n; ++g) {
        RoundContext& ctx = ctxs[g];
        ctx.round = round_index;
        ctx.total_rounds = config.rounds;
        ctx.num_slots = L;
        ctx.role = g == 0 ? Role::Sharing : Role::Shared;
        ctx.group = group;
        ctx.rank = g;
        ctx.weights = config.weights;
        ctx.last_outcome = previous;
        ctx.rng = &agent_rngs[g];
        if (agents[group[g]]->policy_kind() == PolicyKind::Genie) {
            ctx.scenario = &scenario;
            ctx.large_scale = &large_scale;
            ctx.channel = &channel;
        }
    }

    // message replay: the scoreboard summary goes to everyone, last round's
    // member declarations go to everyone who has not seen them
    if (previous != nullptr) {
        for (const CoordinationMessage& msg : previous->messages) {
            bool synthesized = msg.kind == CoordinationMessage::Kind::Feedback &&
                               msg.sender_ap == group.front();
            for (int g = 0; g < n; ++g) {
                if (synthesized) {
                    ctxs[g].inbox.push_back(msg);
                } else if (msg.kind == CoordinationMessage::Kind::Feedback &&
                           msg.sender_ap != group[g]) {
                    ctxs[g].inbox.push_back(msg);
                } else if (msg.kind == CoordinationMessage::Kind::Proposal && g == 0 &&
                           msg.sender_ap != group[g]) {
                    // a proposal from someone else would mean the roles moved;
                    // deliver defensively
                    ctxs[g].inbox.push_back(msg);
                }
            }
        }
    }

    std::vector<AgentDecision> decisions(n);

    decisions[0] = agents[group[0]]->decide_round(ctxs[0]);
    if (decisions[0].fallback) {
        std::ostringstream os;
        os << "round " << (round_index + 1) << ": ap" << group[0]
           << " used the deterministic fallback";
        warnings.push_back(os.str());
    }
    {
        // under no_negotiation the proposal still goes out, but it is mute:
        // empty body, no declared schedule
        TransmissionSchedule sched{group[0], decisions[0].slots};
        std::optional<std::string> declared;
        if (!ablations.no_negotiation) declared = sched.bits();
        CoordinationMessage proposal = make_message(
            CoordinationMessage::Kind::Proposal, group[0], round_index, sequence_counter,
            ablations.no_negotiation ? std::string() : decisions[0].message, declared,
            config.message_char_cap, warnings);
        outcome.messages.push_back(proposal);
        for (int g = 1; g < n; ++g) ctxs[g].inbox.push_back(proposal);
    }

    for (int g = 1; g < n; ++g) {
        decisions[g] = agents[group[g]]->decide_round(ctxs[g]);
        if (decisions[g].fallback) {
            std::ostringstream os;
            os << "round " << (round_index + 1) << ": ap" << group[g]
               << " used the deterministic fallback";
            warnings.push_back(os.str());
        }
        TransmissionSchedule sched{group[g], decisions[g].slots};
        std::optional<std::string> declared;
        if (!ablations.no_negotiation) declared = sched.bits();
        outcome.messages.push_back(make_message(
            CoordinationMessage::Kind::Feedback, group[g], round_index, sequence_counter,
            ablations.no_negotiation ? std::string() : decisions[g].message, declared,
            config.message_char_cap, warnings));
    }

    for (int g = 0; g < n; ++g) {
        if (static_cast<int>(decisions[g].slots.size()) != L)
            throw std::logic_error("run_negotiation_round: policy returned a bad slot count");
        outcome.schedules.push_back(TransmissionSchedule{group[g], decisions[g].slots});
        if (decisions[g].fallback) outcome.fallback_members.push_back(group[g]);
    }

    // transmit: per-slot fading, linear-domain SINR, inclusive capture
    RngStream fading_rng(master_seed,
                         {RngStream::tag("fading"), static_cast<std::uint64_t>(round_index)});
    outcome.states.assign(n, std::vector<SlotState>(L, SlotState::Idle));
    outcome.sinr_db.assign(n, std::vector<double>(L, std::numeric_limits<double>::quiet_NaN()));
    for (int s = 0; s < L; ++s) {
        SlotFading fading = sample_slot_fading(scenario.bss_count, channel, fading_rng);
        std::vector<int> active;
        for (int g = 0; g < n; ++g)
            if (outcome.schedules[g].slots[s]) active.push_back(group[g]);
        for (int g = 0; g < n; ++g) {
            if (!outcome.schedules[g].slots[s]) continue;
            double sinr = compute_sinr_db(active, group[g], large_scale, fading,
                                          scenario.tx_power_dbm, channel.noise_floor_dbm);
            outcome.sinr_db[g][s] = sinr;
            outcome.states[g][s] = slot_success(sinr, channel.capture_threshold_db)
                                       ? SlotState::Success
                                       : SlotState::CollisionLoss;
        }
    }

    ScoreResult scores = score_round(outcome.schedules, outcome.states, config.weights);
    outcome.scores = scores.per_ap;
    outcome.group_score = scores.group;

    outcome.messages.push_back(make_message(
        CoordinationMessage::Kind::Feedback, group.front(), round_index, sequence_counter,
        ablations.no_negotiation ? std::string() : feedback_body(outcome), std::nullopt,
        config.message_char_cap, warnings));

    for (int g = 0; g < n; ++g)
        agents[group[g]]->observe_round(outcome, ctxs[g], decisions[g]);

    return outcome;
}

TxopResult run_txop(const TopologyScenario& scenario, const LargeScaleRealization& large_scale,
                    const ChannelParams& channel, const TxopConfig& config,
                    const std::vector<Agent*>& agents, const AblationFlags& ablations,
                    std::uint64_t master_seed) {
    if (scenario.bss_count < 1) throw std::invalid_argument("run_txop: empty scenario");
    if (static_cast<int>(agents.size()) < scenario.bss_count)
        throw std::invalid_argument("run_txop: agents must cover every AP");

    std::vector<int> contenders(scenario.bss_count);
    for (int i = 0; i < scenario.bss_count; ++i) contenders[i] = i;
    RngStream contend_rng(master_seed, {RngStream::tag("contend")});
    MacParams mac;
    mac.cca_dbm = config.cca_dbm;
    ContentionResult contention = contend(contenders, mac, contend_rng);

    TxopResult result;
    result.sharing_ap = contention.winner_ap;
    result.contention_backoff_slots = contention.winning_backoff;
    result.group = form_group(scenario, large_scale, contention.winner_ap, config.cca_dbm);

    long sequence = 0;
    const RoundOutcome* previous = nullptr;
    result.rounds.reserve(config.rounds);
    for (int r = 0; r < config.rounds; ++r) {
        RoundOutcome outcome = run_negotiation_round(
            r, result.group, agents, scenario, large_scale, channel, config, ablations,
            master_seed, previous, sequence, result.warnings);
        result.rounds.push_back(std::move(outcome));
        previous = &result.rounds.back();
    }
    return result;
}

}  // namespace mapc
