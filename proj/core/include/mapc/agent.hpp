#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mapc/gateway.hpp"
#include "mapc/memory.hpp"
#include "mapc/protocol.hpp"
#include "mapc/rng.hpp"

namespace mapc {

struct AblationFlags {
    bool no_reflection = false;   // reflections forced empty
    bool no_negotiation = false;  // no messages exchanged, STM blinded to peers
    bool no_stm = false;          // STM window forced to 0
    bool no_ltm = false;          // knowledge base disabled (no retrieve, no update)
};

enum class Role { Sharing, Shared };

enum class PolicyKind { Llm, Heuristic, Genie, Scripted };
std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& text);

struct AgentConfig {
    int stm_window = 5;
    std::size_t kb_capacity = 10;
    double similarity_threshold = 0.85;
    int retrieval_k = 3;
    int prompt_char_budget = 6000;  // system + user, characters
    double temperature = 0.2;
};

// One agent's decision for one negotiation round.
struct AgentDecision {
    std::vector<std::uint8_t> slots;
    std::string message;     // outgoing body (suggestion tokens included for the sharing AP)
    std::string reflection;  // one-line lesson, may be empty
    std::string strategy;    // policy tag stored with the round's exemplar
    bool fallback = false;   // deterministic TDMA fallback was used
};

struct ParseResult {
    bool ok = false;
    AgentDecision decision;
    std::string error;
};

// DECISION block grammar (one decision per reply):
//   DECISION
//   schedule: 10101
//   message: <one line, may be empty>
//   reflection: <one line, may be empty>
//   END
// Text before DECISION is ignored; unknown lines inside the block are
// ignored; schedule is mandatory and must be exactly num_slots of [01].
ParseResult parse_decision(const std::string& text, int num_slots);
std::string render_decision(const AgentDecision& decision);

// Slot-plan tokens carried inside a proposal body: "ap<id>=<bits>".
std::string render_suggestions(const std::map<int, std::vector<std::uint8_t>>& plan);
std::map<int, std::vector<std::uint8_t>> parse_suggestions(const std::string& body, int num_slots);

// What the engine hands an agent when asking for a decision.
struct RoundContext {
    int round = 0;  // 0-based
    int total_rounds = 0;
    int num_slots = 0;
    Role role = Role::Shared;
    std::vector<int> group;  // global AP ids, sharing AP first
    int rank = 0;            // own index in group
    ScoreWeights weights;
    std::vector<CoordinationMessage> inbox;    // visible this round, causal order
    const RoundOutcome* last_outcome = nullptr;  // null in round 0
    RngStream* rng = nullptr;                  // per-agent substream, owned by engine

    // Oracle view, populated only for the genie policy.
    const TopologyScenario* scenario = nullptr;
    const LargeScaleRealization* large_scale = nullptr;
    const ChannelParams* channel = nullptr;
};

// Inputs assembled by the agent pipeline before the policy acts.
struct DecisionInputs {
    std::string situation;
    std::string evaluation;
    std::string tool_outcome;  // rendered get_transmission_outcome, "" in round 0
    std::vector<Exemplar> exemplars;  // retrieval ranking order
};

class Agent;

class DecisionPolicy {
public:
    virtual ~DecisionPolicy() = default;
    virtual PolicyKind kind() const = 0;
    virtual AgentDecision decide(Agent& agent, const RoundContext& ctx,
                                 const DecisionInputs& inputs) = 0;
};

// Canonical text renderings. Frozen: tests and the knowledge base key on them.
std::string render_situation(int ap_id, const RoundContext& ctx);
std::string render_evaluation(int ap_id, const RoundContext& ctx, const ShortTermMemory& stm);
std::string render_transmission_outcome(int ap_id, const RoundOutcome& outcome,
                                        bool include_peers = true);
std::vector<std::string> stm_transcript_lines(int ap_id, const ShortTermMemory& stm);

class Agent {
public:
    Agent(int ap_id, AgentConfig config, AblationFlags ablations,
          std::unique_ptr<DecisionPolicy> policy, const EmbeddingProvider* embedder);

    // evaluate -> retrieve -> act. Does not mutate memory.
    AgentDecision decide_round(const RoundContext& ctx);

    // tool record + STM push + reflect -> ltm_update.
    void observe_round(const RoundOutcome& outcome, const RoundContext& ctx,
                       const AgentDecision& own_decision);

    void seed_knowledge(const std::vector<Exemplar>& exemplars);

    int id() const { return ap_id_; }
    PolicyKind policy_kind() const { return policy_->kind(); }
    const AgentConfig& config() const { return config_; }
    const AblationFlags& ablations() const { return ablations_; }
    const ShortTermMemory& stm() const { return stm_; }
    ShortTermMemory& stm() { return stm_; }
    const KnowledgeBase& knowledge() const { return kb_; }
    KnowledgeBase& knowledge() { return kb_; }
    const EmbeddingProvider& embedder() const { return *embedder_; }

private:
    int ap_id_;
    AgentConfig config_;
    AblationFlags ablations_;
    std::unique_ptr<DecisionPolicy> policy_;
    const EmbeddingProvider* embedder_;  // non-owning, shared across agents
    ShortTermMemory stm_;
    KnowledgeBase kb_;
};

// Escalation ladder: 0 conservative TDMA, 1 TDMA plus one probe slot, 2 full reuse.
class HeuristicPolicy : public DecisionPolicy {
public:
    PolicyKind kind() const override { return PolicyKind::Heuristic; }
    AgentDecision decide(Agent& agent, const RoundContext& ctx,
                         const DecisionInputs& inputs) override;

    int level() const { return level_; }

private:
    int level_ = 0;
    int clean_streak_ = 0;
    bool cooldown_ = false;            // suppress the probe right after a collision round
    std::optional<int> claim_rank_;    // self-claimed partition when no plan is visible
    std::vector<std::uint8_t> adopted_base_;  // plan slots adopted from the sharing AP
};

// Omniscient per-slot search over concurrent transmit sets (unit fading).
class GeniePolicy : public DecisionPolicy {
public:
    PolicyKind kind() const override { return PolicyKind::Genie; }
    AgentDecision decide(Agent& agent, const RoundContext& ctx,
                         const DecisionInputs& inputs) override;
};

// Per-slot genie solution for a whole group; index g gives member g's bits.
std::vector<std::vector<std::uint8_t>> genie_group_schedules(
    const std::vector<int>& group, int num_slots, const TopologyScenario& scenario,
    const LargeScaleRealization& large_scale, const ChannelParams& channel);

// Replays a fixed queue of raw decision texts; falls back to the TDMA
// partition when the queue runs dry or a text fails to parse.
class ScriptedPolicy : public DecisionPolicy {
public:
    explicit ScriptedPolicy(std::vector<std::string> scripts = {});
    PolicyKind kind() const override { return PolicyKind::Scripted; }
    AgentDecision decide(Agent& agent, const RoundContext& ctx,
                         const DecisionInputs& inputs) override;

private:
    std::vector<std::string> scripts_;
    std::size_t next_ = 0;
};

struct PromptBundle {
    std::string system;
    std::string user;
    int dropped_stm_lines = 0;
    int dropped_exemplars = 0;
};

// Two-part prompt under the character budget. Trims oldest STM transcript
// lines first, then lowest-ranked exemplars; the framing sections stay.
PromptBundle build_prompt(const Agent& agent, const RoundContext& ctx,
                          const DecisionInputs& inputs, int char_budget);

class LlmPolicy : public DecisionPolicy {
public:
    LlmPolicy(std::shared_ptr<ChatBackend> backend, std::string model, double temperature = 0.2,
              int parse_retries = 2);
    PolicyKind kind() const override { return PolicyKind::Llm; }
    AgentDecision decide(Agent& agent, const RoundContext& ctx,
                         const DecisionInputs& inputs) override;

    int fallback_count() const { return fallbacks_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    std::string model_;
    double temperature_;
    int parse_retries_;
    int fallbacks_ = 0;
};

// Deterministic rank-based TDMA fallback decision.
AgentDecision fallback_decision(const RoundContext& ctx);

std::unique_ptr<DecisionPolicy> make_policy(PolicyKind kind,
                                            std::shared_ptr<ChatBackend> backend = nullptr,
                                            const std::string& model = "",
                                            double temperature = 0.2, int parse_retries = 2);

}  // namespace mapc
