#include "mapc/agent.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace mapc {
namespace {

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string bits_to_string(const std::vector<std::uint8_t>& slots) {
    std::string out(slots.size(), '0');
    for (std::size_t i = 0; i < slots.size(); ++i) out[i] = slots[i] ? '1' : '0';
    return out;
}

std::string states_to_string(const std::vector<SlotState>& states) {
    std::string out;
    out.reserve(states.size());
    for (SlotState s : states) out.push_back(slot_state_char(s));
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

std::string join_group(const std::vector<int>& group) {
    std::ostringstream os;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (i) os << ",";
        os << group[i];
    }
    return os.str();
}

int find_member(const std::vector<int>& group, int ap_id) {
    for (std::size_t i = 0; i < group.size(); ++i)
        if (group[i] == ap_id) return static_cast<int>(i);
    return -1;
}

bool row_collided(const std::vector<SlotState>& states) {
    return std::any_of(states.begin(), states.end(),
                       [](SlotState s) { return s == SlotState::CollisionLoss; });
}

// Escalation thresholds. A probe-success lesson needs score above the low bar
// before it accelerates reuse; a full-reuse restart needs the high bar.
constexpr double kProbeLessonScore = 1.5;
constexpr double kWarmRestartScore = 2.0;

}  // namespace

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Llm: return "llm";
        case PolicyKind::Heuristic: return "heuristic";
        case PolicyKind::Genie: return "genie";
        case PolicyKind::Scripted: return "scripted";
    }
    throw std::invalid_argument("to_string: unknown policy kind");
}

PolicyKind policy_kind_from_string(const std::string& text) {
    if (text == "llm") return PolicyKind::Llm;
    if (text == "heuristic") return PolicyKind::Heuristic;
    if (text == "genie") return PolicyKind::Genie;
    if (text == "scripted") return PolicyKind::Scripted;
    throw std::invalid_argument("unknown policy kind: " + text);
}

ParseResult parse_decision(const std::string& text, int num_slots) {
    ParseResult result;
    std::vector<std::string> lines;
    {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) lines.push_back(trim(line));
    }
    std::size_t i = 0;
    while (i < lines.size() && lines[i] != "DECISION") ++i;
    if (i == lines.size()) {
        result.error = "missing DECISION line";
        return result;
    }
    ++i;
    bool saw_schedule = false;
    bool saw_message = false;
    bool saw_reflection = false;
    bool saw_end = false;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line == "END") {
            saw_end = true;
            break;
        }
        auto value_of = [&](const char* key) -> std::optional<std::string> {
            std::string prefix = std::string(key) + ":";
            if (line.rfind(prefix, 0) != 0) return std::nullopt;
            return trim(line.substr(prefix.size()));
        };
        if (auto v = value_of("schedule")) {
            if (saw_schedule) {
                result.error = "duplicate schedule line";
                return result;
            }
            saw_schedule = true;
            if (static_cast<int>(v->size()) != num_slots ||
                v->find_first_not_of("01") != std::string::npos) {
                result.error = "schedule must be exactly " + std::to_string(num_slots) +
                               " characters of 0/1";
                return result;
            }
            result.decision.slots.assign(num_slots, 0);
            for (int s = 0; s < num_slots; ++s) result.decision.slots[s] = (*v)[s] == '1';
        } else if (auto m = value_of("message")) {
            if (!saw_message) {
                saw_message = true;
                result.decision.message = *m;
            }
        } else if (auto r = value_of("reflection")) {
            if (!saw_reflection) {
                saw_reflection = true;
                result.decision.reflection = *r;
            }
        }
        // anything else inside the block is tolerated chatter
    }
    if (!saw_end) {
        result.error = "missing END line";
        return result;
    }
    if (!saw_schedule) {
        result.error = "missing schedule line";
        return result;
    }
    result.ok = true;
    return result;
}

std::string render_decision(const AgentDecision& decision) {
    std::ostringstream os;
    os << "DECISION\n";
    os << "schedule: " << bits_to_string(decision.slots) << "\n";
    os << "message: " << one_line(decision.message) << "\n";
    os << "reflection: " << one_line(decision.reflection) << "\n";
    os << "END\n";
    return os.str();
}

std::string render_suggestions(const std::map<int, std::vector<std::uint8_t>>& plan) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [ap, slots] : plan) {
        if (!first) os << " ";
        first = false;
        os << "ap" << ap << "=" << bits_to_string(slots);
    }
    return os.str();
}

std::map<int, std::vector<std::uint8_t>> parse_suggestions(const std::string& body,
                                                           int num_slots) {
    std::map<int, std::vector<std::uint8_t>> plan;
    static const std::regex token(R"(ap(\d+)=([01]+))");
    auto begin = std::sregex_iterator(body.begin(), body.end(), token);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        std::string bits = m[2].str();
        if (static_cast<int>(bits.size()) != num_slots) continue;
        int ap = std::stoi(m[1].str());
        std::vector<std::uint8_t> slots(num_slots, 0);
        for (int s = 0; s < num_slots; ++s) slots[s] = bits[s] == '1';
        plan[ap] = std::move(slots);
    }
    return plan;
}

std::string render_situation(int ap_id, const RoundContext& ctx) {
    std::ostringstream os;
    os << "ap=" << ap_id << " role=" << (ctx.role == Role::Sharing ? "sharing" : "shared")
       << " rank=" << ctx.rank << " group=" << join_group(ctx.group)
       << " members=" << ctx.group.size() << " round=" << (ctx.round + 1) << "/"
       << ctx.total_rounds << " slots=" << ctx.num_slots << " weights=+"
       << fmt1(ctx.weights.success) << "/-" << fmt1(ctx.weights.collision) << "/-"
       << fmt1(ctx.weights.idle);
    return os.str();
}

std::string render_evaluation(int ap_id, const RoundContext& ctx, const ShortTermMemory& stm) {
    struct View {
        double score;
        int success = 0, collision = 0;
    };
    std::vector<View> views;
    for (const StmRecord& rec : stm.records()) {
        int g = find_member(rec.group, ap_id);
        if (g < 0) continue;
        View v{rec.scores[g]};
        for (SlotState s : rec.states[g]) {
            if (s == SlotState::Success) ++v.success;
            if (s == SlotState::CollisionLoss) ++v.collision;
        }
        views.push_back(v);
    }
    if (views.empty() && ctx.last_outcome) {
        int g = find_member(ctx.last_outcome->group, ap_id);
        if (g >= 0) {
            View v{ctx.last_outcome->scores[g]};
            for (SlotState s : ctx.last_outcome->states[g]) {
                if (s == SlotState::Success) ++v.success;
                if (s == SlotState::CollisionLoss) ++v.collision;
            }
            views.push_back(v);
        }
    }
    if (views.empty()) return "evaluation: first round, no history";
    const View& last = views.back();
    std::string trend = "n/a";
    if (views.size() >= 2) {
        double prev = views[views.size() - 2].score;
        trend = last.score > prev ? "improving" : (last.score < prev ? "declining" : "flat");
    }
    std::ostringstream os;
    os << "evaluation: last score=" << fmt1(last.score) << " (" << last.success << " success, "
       << last.collision << " collision), trend=" << trend;
    return os.str();
}

std::string render_transmission_outcome(int ap_id, const RoundOutcome& outcome,
                                        bool include_peers) {
    int g = find_member(outcome.group, ap_id);
    if (g < 0) throw std::invalid_argument("render_transmission_outcome: ap not in group");
    int idle_slots = 0;
    const std::size_t num_slots = outcome.states[g].size();
    for (std::size_t s = 0; s < num_slots; ++s) {
        bool any = false;
        for (const auto& sched : outcome.schedules) any = any || sched.slots[s] != 0;
        if (!any) ++idle_slots;
    }
    std::ostringstream os;
    os << "outcome r" << (outcome.round + 1) << ": own=" << outcome.schedules[g].bits()
       << " states=" << states_to_string(outcome.states[g]) << " score="
       << fmt1(outcome.scores[g]) << " group=" << fmt1(outcome.group_score)
       << " idle_slots=" << idle_slots;
    if (include_peers) {
        for (std::size_t j = 0; j < outcome.group.size(); ++j) {
            if (static_cast<int>(j) == g) continue;
            os << " ap" << outcome.group[j] << "=" << outcome.schedules[j].bits() << "/"
               << states_to_string(outcome.states[j]);
        }
    }
    return os.str();
}

std::vector<std::string> stm_transcript_lines(int ap_id, const ShortTermMemory& stm) {
    std::vector<std::string> lines;
    for (const StmRecord& rec : stm.records()) {
        int g = find_member(rec.group, ap_id);
        if (g < 0) continue;
        std::ostringstream os;
        os << "r" << (rec.round + 1) << " own=" << rec.schedules[g] << "/"
           << states_to_string(rec.states[g]) << " score=" << fmt1(rec.scores[g])
           << " group=" << fmt1(rec.group_score);
        for (std::size_t j = 0; j < rec.group.size(); ++j) {
            if (static_cast<int>(j) == g) continue;
            os << " ap" << rec.group[j] << "=" << rec.schedules[j] << "/"
               << states_to_string(rec.states[j]);
        }
        lines.push_back(os.str());
    }
    return lines;
}

Agent::Agent(int ap_id, AgentConfig config, AblationFlags ablations,
             std::unique_ptr<DecisionPolicy> policy, const EmbeddingProvider* embedder)
    : ap_id_(ap_id),
      config_(config),
      ablations_(ablations),
      policy_(std::move(policy)),
      embedder_(embedder),
      stm_(ablations.no_stm ? 0 : config.stm_window),
      kb_(config.kb_capacity, config.similarity_threshold) {
    if (!policy_) throw std::invalid_argument("Agent: null policy");
    if (!embedder_) throw std::invalid_argument("Agent: null embedder");
}

AgentDecision Agent::decide_round(const RoundContext& ctx) {
    DecisionInputs inputs;
    inputs.situation = render_situation(ap_id_, ctx);
    inputs.evaluation = render_evaluation(ap_id_, ctx, stm_);
    if (ctx.last_outcome)
        inputs.tool_outcome =
            render_transmission_outcome(ap_id_, *ctx.last_outcome, !ablations_.no_negotiation);
    if (!ablations_.no_ltm && kb_.size() > 0 && config_.retrieval_k > 0)
        inputs.exemplars = kb_.retrieve(embedder_->embed(inputs.situation), config_.retrieval_k);
    return policy_->decide(*this, ctx, inputs);
}

void Agent::observe_round(const RoundOutcome& outcome, const RoundContext& ctx,
                          const AgentDecision& own_decision) {
    int g = find_member(outcome.group, ap_id_);
    if (g < 0) throw std::invalid_argument("observe_round: ap not in group");

    // situation key is the one the decision answered, so render before the push
    std::string situation = render_situation(ap_id_, ctx);

    StmRecord record;
    record.round = outcome.round;
    record.group_score = outcome.group_score;
    if (ablations_.no_negotiation) {
        record.group = {ap_id_};
        record.schedules = {outcome.schedules[g].bits()};
        record.states = {outcome.states[g]};
        record.scores = {outcome.scores[g]};
    } else {
        record.group = outcome.group;
        for (const auto& sched : outcome.schedules) record.schedules.push_back(sched.bits());
        record.states = outcome.states;
        record.scores = outcome.scores;
        for (const auto& msg : outcome.messages) record.message_bodies.push_back(msg.body);
    }
    stm_.push(std::move(record));

    std::string reflection;
    if (!ablations_.no_reflection) {
        if (!own_decision.reflection.empty()) {
            reflection = one_line(own_decision.reflection);
        } else {
            const auto& states = outcome.states[g];
            int first_collision = -1;
            int collisions = 0, transmissions = 0;
            for (std::size_t s = 0; s < states.size(); ++s) {
                if (states[s] != SlotState::Idle) ++transmissions;
                if (states[s] == SlotState::CollisionLoss) {
                    ++collisions;
                    if (first_collision < 0) first_collision = static_cast<int>(s);
                }
            }
            std::ostringstream os;
            if (collisions > 0) {
                os << "collided in " << collisions << " slots; avoid slot " << first_collision;
            } else if (transmissions > 0) {
                bool reuse = own_decision.strategy.find("probe=") != std::string::npos &&
                             own_decision.strategy.find("probe=none") == std::string::npos;
                reuse = reuse || own_decision.strategy.find("level=2") != std::string::npos;
                if (reuse)
                    os << "reuse ok; schedule " << outcome.schedules[g].bits() << " clean";
                else
                    os << "clean; schedule " << outcome.schedules[g].bits() << " held";
            } else {
                os << "idle round";
            }
            reflection = os.str();
        }
    }

    if (!ablations_.no_ltm) {
        Exemplar ex;
        ex.situation = situation;
        ex.action_bits = outcome.schedules[g].bits();
        ex.strategy = own_decision.strategy.empty() ? to_string(policy_->kind())
                                                    : own_decision.strategy;
        ex.score = outcome.scores[g];
        ex.reflection = reflection;
        ex.embedding = embedder_->embed(situation);
        kb_.update(std::move(ex));
    }
}

void Agent::seed_knowledge(const std::vector<Exemplar>& exemplars) {
    if (ablations_.no_ltm) return;
    for (Exemplar ex : exemplars) {
        if (ex.embedding.empty()) ex.embedding = embedder_->embed(ex.situation);
        kb_.seed(std::move(ex));
    }
}

AgentDecision fallback_decision(const RoundContext& ctx) {
    AgentDecision d;
    d.slots = rank_partition_slots(ctx.rank, static_cast<int>(ctx.group.size()), ctx.num_slots);
    d.message = "fallback: rank partition r" + std::to_string(ctx.rank) + "/" +
                std::to_string(ctx.group.size());
    d.strategy = "fallback";
    d.fallback = true;
    return d;
}

AgentDecision HeuristicPolicy::decide(Agent& agent, const RoundContext& ctx,
                                      const DecisionInputs& inputs) {
    const int n = static_cast<int>(ctx.group.size());
    const int L = ctx.num_slots;

    if (ctx.round == 0) {
        level_ = 0;
        clean_streak_ = 0;
        cooldown_ = false;
        claim_rank_.reset();
        adopted_base_.clear();
    }

    // own visible history, oldest first; the STM window, or failing that the
    // last transmission report
    struct Row {
        std::vector<std::uint8_t> slots;
        std::vector<SlotState> states;
    };
    std::vector<Row> hist;
    for (const StmRecord& rec : agent.stm().records()) {
        int g = find_member(rec.group, agent.id());
        if (g < 0) continue;
        Row row;
        row.slots.assign(L, 0);
        for (int s = 0; s < L && s < static_cast<int>(rec.schedules[g].size()); ++s)
            row.slots[s] = rec.schedules[g][s] == '1';
        row.states = rec.states[g];
        hist.push_back(std::move(row));
    }
    if (hist.empty() && ctx.last_outcome) {
        int g = find_member(ctx.last_outcome->group, agent.id());
        if (g >= 0) hist.push_back({ctx.last_outcome->schedules[g].slots,
                                    ctx.last_outcome->states[g]});
    }

    if (ctx.round > 0 && !hist.empty()) {
        bool collided = row_collided(hist.back().states);
        int recent = 0;
        for (std::size_t i = hist.size() >= 3 ? hist.size() - 3 : 0; i < hist.size(); ++i)
            if (row_collided(hist[i].states)) ++recent;
        if (collided) {
            level_ = recent >= 2 ? 0 : std::max(0, level_ - 1);
            clean_streak_ = 0;
            cooldown_ = true;
        } else {
            ++clean_streak_;
            cooldown_ = false;
            int visible = agent.stm().capacity() > 0 ? agent.stm().capacity() : 1;
            int patience = std::min(2, std::max(1, visible));
            if (clean_streak_ >= patience && level_ < 2) {
                ++level_;
                clean_streak_ = 0;
            }
        }
    }

    // long-term lessons: restart full reuse after a proven-clean run, and cut
    // the probe patience short once a probe has already paid off here
    if (ctx.round > 0 && !hist.empty() && !row_collided(hist.back().states)) {
        for (const Exemplar& ex : inputs.exemplars) {
            if (ex.strategy.find("level=2") != std::string::npos &&
                ex.score > kWarmRestartScore &&
                ex.reflection.find("avoid") == std::string::npos && level_ < 2) {
                level_ = 2;
                clean_streak_ = 0;
            }
            if (level_ == 1 && clean_streak_ >= 1 && ex.score > kProbeLessonScore &&
                ex.strategy.find("level=1 probe=") != std::string::npos &&
                ex.strategy.find("probe=none") == std::string::npos &&
                ex.reflection.find("reuse ok") != std::string::npos) {
                level_ = 2;
                clean_streak_ = 0;
            }
        }
    }

    // base slots: the sharing AP anchors rank 0 and distributes the plan;
    // members take the plan from the proposal, or self-claim when unreachable
    std::vector<std::uint8_t> base;
    std::map<int, std::vector<std::uint8_t>> plan;
    if (ctx.role == Role::Sharing) {
        base = rank_partition_slots(0, n, L);
        for (int i = 0; i < n; ++i) plan[ctx.group[i]] = rank_partition_slots(i, n, L);
    } else {
        for (const CoordinationMessage& msg : ctx.inbox) {
            if (msg.kind != CoordinationMessage::Kind::Proposal) continue;
            if (msg.sender_ap != ctx.group.front()) continue;
            auto suggested = parse_suggestions(msg.body, L);
            auto it = suggested.find(agent.id());
            if (it != suggested.end()) adopted_base_ = it->second;
        }
        if (!adopted_base_.empty()) {
            base = adopted_base_;
        } else if (!agent.ablations().no_negotiation) {
            base = rank_partition_slots(ctx.rank, n, L);
        } else {
            // nothing was ever negotiated: claim a partition, re-claim after a
            // collision
            bool reclaim = !claim_rank_.has_value();
            if (!hist.empty() && row_collided(hist.back().states)) reclaim = true;
            if (reclaim) {
                if (!ctx.rng) throw std::logic_error("heuristic claim needs a round rng");
                claim_rank_ = static_cast<int>(ctx.rng->uniform_below(n));
            }
            base = rank_partition_slots(*claim_rank_, n, L);
        }
    }

    // probe slot: lowest-index non-base slot that has not burned us lately
    int probe = -1;
    if (level_ == 1 && !cooldown_) {
        std::vector<bool> avoided(L, false);
        std::size_t lo = hist.size() >= 3 ? hist.size() - 3 : 0;
        for (std::size_t i = lo; i < hist.size(); ++i)
            for (int s = 0; s < L; ++s)
                if (hist[i].slots[s] && hist[i].states[s] == SlotState::CollisionLoss)
                    avoided[s] = true;
        static const std::regex avoid_token(R"(avoid slot (\d+))");
        for (const Exemplar& ex : inputs.exemplars) {
            std::smatch m;
            if (std::regex_search(ex.reflection, m, avoid_token)) {
                int s = std::stoi(m[1].str());
                if (s >= 0 && s < L) avoided[s] = true;
            }
        }
        for (int s = 0; s < L; ++s) {
            if (base[s] || avoided[s]) continue;
            probe = s;
            break;
        }
    }

    AgentDecision d;
    d.slots = base;
    if (level_ == 2) {
        d.slots.assign(L, 1);
    } else if (probe >= 0) {
        d.slots[probe] = 1;
    }

    std::ostringstream strat;
    strat << "level=" << level_;
    if (level_ == 1) strat << " probe=" << (probe >= 0 ? std::to_string(probe) : "none");
    d.strategy = strat.str();

    std::ostringstream msg;
    msg << "level=" << level_ << " streak=" << clean_streak_ << " base="
        << bits_to_string(base);
    if (ctx.role == Role::Sharing) msg << " plan: " << render_suggestions(plan);
    d.message = msg.str();
    return d;
}

std::vector<std::vector<std::uint8_t>> genie_group_schedules(
    const std::vector<int>& group, int num_slots, const TopologyScenario& scenario,
    const LargeScaleRealization& large_scale, const ChannelParams& channel) {
    const int n = static_cast<int>(group.size());
    if (n <= 0 || n > 20) throw std::invalid_argument("genie_group_schedules: bad group size");
    SlotFading unit = unit_fading(scenario.bss_count);

    auto feasible = [&](unsigned mask) {
        std::vector<int> active;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) active.push_back(group[i]);
        for (int ap : active) {
            double sinr = compute_sinr_db(active, ap, large_scale, unit, scenario.tx_power_dbm,
                                          channel.noise_floor_dbm);
            if (!slot_success(sinr, channel.capture_threshold_db)) return false;
        }
        return true;
    };

    std::vector<std::vector<std::uint8_t>> schedules(n, std::vector<std::uint8_t>(num_slots, 0));
    for (int s = 0; s < num_slots; ++s) {
        unsigned best_mask = 0;
        int best_count = -1;
        bool best_pref = false;
        const unsigned pref_bit = 1u << (s % n);
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            int count = std::popcount(mask);
            if (count < best_count) continue;
            bool pref = (mask & pref_bit) != 0;
            if (count == best_count) {
                if (best_pref && !pref) continue;
                if (best_pref == pref && mask >= best_mask) continue;
            }
            if (!feasible(mask)) continue;
            best_mask = mask;
            best_count = count;
            best_pref = pref;
        }
        for (int i = 0; i < n; ++i)
            if (best_mask & (1u << i)) schedules[i][s] = 1;
    }
    return schedules;
}

AgentDecision GeniePolicy::decide(Agent& agent, const RoundContext& ctx,
                                  const DecisionInputs& inputs) {
    (void)inputs;
    if (!ctx.scenario || !ctx.large_scale || !ctx.channel)
        throw std::logic_error("genie policy needs the oracle view");
    auto schedules = genie_group_schedules(ctx.group, ctx.num_slots, *ctx.scenario,
                                           *ctx.large_scale, *ctx.channel);
    AgentDecision d;
    d.slots = schedules[ctx.rank];
    d.strategy = "genie";
    (void)agent;
    return d;
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> scripts)
    : scripts_(std::move(scripts)) {}

AgentDecision ScriptedPolicy::decide(Agent& agent, const RoundContext& ctx,
                                     const DecisionInputs& inputs) {
    (void)agent;
    (void)inputs;
    if (next_ < scripts_.size()) {
        ParseResult parsed = parse_decision(scripts_[next_++], ctx.num_slots);
        if (parsed.ok) {
            parsed.decision.strategy = "scripted";
            return parsed.decision;
        }
    }
    AgentDecision d = fallback_decision(ctx);
    d.strategy = "scripted";
    return d;
}

PromptBundle build_prompt(const Agent& agent, const RoundContext& ctx,
                          const DecisionInputs& inputs, int char_budget) {
    PromptBundle bundle;
    {
        std::ostringstream sys;
        sys << "You are the MAC coordination agent for access point ap" << agent.id()
            << " in a multi-AP Wi-Fi group.\n"
            << "Role: " << (ctx.role == Role::Sharing ? "sharing AP (group owner)"
                                                      : "shared AP (invited member)")
            << ". Group APs: [" << join_group(ctx.group) << "]. Round " << (ctx.round + 1)
            << " of " << ctx.total_rounds << ", " << ctx.num_slots << " slots per round.\n"
            << "Each round every agent commits a transmit schedule. Scoring per AP: +"
            << fmt1(ctx.weights.success) << " per successful slot, -"
            << fmt1(ctx.weights.collision) << " per collided slot, -" << fmt1(ctx.weights.idle)
            << " per slot the whole group leaves idle.\n"
            << "Transmitting in the same slot as a nearby AP risks collision; leaving slots "
               "idle wastes airtime. Balance reuse against safety using the history and "
               "lessons below.\n";
        if (ctx.role == Role::Sharing)
            sys << "You may assign base slots by embedding plan tokens ap<id>=<bits> in your "
                   "message.\n";
        sys << "Reply with exactly one block and nothing else:\n"
            << "DECISION\n"
            << "schedule: <" << ctx.num_slots << " characters, 0 or 1; character k is slot k>\n"
            << "message: <one line to the group, may be empty>\n"
            << "reflection: <one line lesson for your future self"
            << (agent.ablations().no_reflection ? ", leave empty" : "") << ">\n"
            << "END";
        bundle.system = sys.str();
    }

    std::vector<std::string> history = stm_transcript_lines(agent.id(), agent.stm());
    std::size_t history_from = 0;
    std::size_t exemplar_count = inputs.exemplars.size();

    auto render_user = [&]() {
        std::ostringstream user;
        user << "[situation]\n" << inputs.situation << "\n";
        user << "[evaluation]\n" << inputs.evaluation << "\n";
        if (!inputs.tool_outcome.empty()) user << "[outcome]\n" << inputs.tool_outcome << "\n";
        if (exemplar_count > 0) {
            user << "[lessons]\n";
            for (std::size_t i = 0; i < exemplar_count; ++i) {
                const Exemplar& ex = inputs.exemplars[i];
                user << (i + 1) << ". score=" << fmt1(ex.score) << " action=" << ex.action_bits
                     << " strategy=" << ex.strategy;
                if (!ex.reflection.empty()) user << " lesson=" << ex.reflection;
                user << "\n";
            }
        }
        if (history_from < history.size()) {
            user << "[history]\n";
            for (std::size_t i = history_from; i < history.size(); ++i)
                user << history[i] << "\n";
        }
        bool any_body = false;
        for (const CoordinationMessage& msg : ctx.inbox) any_body |= !msg.body.empty();
        if (any_body) {
            user << "[messages]\n";
            for (const CoordinationMessage& msg : ctx.inbox) {
                if (msg.body.empty()) continue;
                user << "ap" << msg.sender_ap << " r" << (msg.round + 1) << ": "
                     << one_line(msg.body) << "\n";
            }
        }
        user << "Commit your schedule for round " << (ctx.round + 1) << " now.";
        return user.str();
    };

    bundle.user = render_user();
    auto total = [&]() { return bundle.system.size() + bundle.user.size(); };
    while (total() > static_cast<std::size_t>(char_budget) && history_from < history.size()) {
        ++history_from;
        ++bundle.dropped_stm_lines;
        bundle.user = render_user();
    }
    while (total() > static_cast<std::size_t>(char_budget) && exemplar_count > 0) {
        --exemplar_count;
        ++bundle.dropped_exemplars;
        bundle.user = render_user();
    }
    return bundle;
}

LlmPolicy::LlmPolicy(std::shared_ptr<ChatBackend> backend, std::string model, double temperature,
                     int parse_retries)
    : backend_(std::move(backend)),
      model_(std::move(model)),
      temperature_(temperature),
      parse_retries_(parse_retries) {
    if (!backend_) throw std::invalid_argument("LlmPolicy: null backend");
}

AgentDecision LlmPolicy::decide(Agent& agent, const RoundContext& ctx,
                                const DecisionInputs& inputs) {
    if (auto* transcribing = dynamic_cast<TranscribingBackend*>(backend_.get()))
        transcribing->set_context("ap" + std::to_string(agent.id()), ctx.round);

    PromptBundle prompt = build_prompt(agent, ctx, inputs, agent.config().prompt_char_budget);
    ChatRequest request;
    request.model = model_;
    request.temperature = temperature_;
    request.messages.push_back({"system", prompt.system});
    request.messages.push_back({"user", prompt.user});

    for (int attempt = 0; attempt <= parse_retries_; ++attempt) {
        std::string reply;
        try {
            reply = backend_->chat(request);
        } catch (const GatewayError&) {
            break;
        }
        ParseResult parsed = parse_decision(reply, ctx.num_slots);
        if (parsed.ok) {
            parsed.decision.strategy = "llm";
            return parsed.decision;
        }
        request.messages.push_back({"assistant", reply});
        request.messages.push_back(
            {"user", "Your reply was not a valid DECISION block (" + parsed.error +
                         "). Reply with only the DECISION block."});
    }
    ++fallbacks_;
    AgentDecision d = fallback_decision(ctx);
    d.strategy = "llm-fallback";
    return d;
}

std::unique_ptr<DecisionPolicy> make_policy(PolicyKind kind, std::shared_ptr<ChatBackend> backend,
                                            const std::string& model, double temperature,
                                            int parse_retries) {
    switch (kind) {
        case PolicyKind::Heuristic: return std::make_unique<HeuristicPolicy>();
        case PolicyKind::Genie: return std::make_unique<GeniePolicy>();
        case PolicyKind::Scripted: return std::make_unique<ScriptedPolicy>();
        case PolicyKind::Llm:
            if (!backend) throw std::invalid_argument("llm policy requires a chat backend");
            return std::make_unique<LlmPolicy>(std::move(backend), model, temperature,
                                               parse_retries);
    }
    throw std::invalid_argument("make_policy: unknown kind");
}

}  // namespace mapc
