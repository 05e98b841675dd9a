#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mapc/agent.hpp"
#include "mapc/mac.hpp"
#include "mapc/metrics.hpp"

namespace mapc {

struct RunConfig {
    ScenarioKind kind = ScenarioKind::Random;
    int bss_count = 2;
    PolicyKind policy = PolicyKind::Heuristic;
    TopologyParams topology;
    ChannelParams channel;
    TxopConfig txop;
    AgentConfig agent;
    AblationFlags ablations;
    MacParams mac;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::string scenario_file;  // when set, one fixed topology for every seed
    std::string out_dir;        // when set, logs and tables are written here
    std::string kb_in;          // knowledge base persistence
    std::string kb_out;
    bool seed_kb = false;  // preload the packaged exemplars into every agent
    int threads = 1;       // seed fan-out; llm runs are forced sequential
};

// Partial JSON objects override defaults field by field.
RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);

// "no_reflection" | "no_negotiation" | "no_stm" | "no_ltm"; throws on others.
void apply_ablation(RunConfig& config, const std::string& name);

// All agents of one run plus the services they borrow from.
struct AgentSet {
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<ChatBackend> backend;  // null unless the llm policy is active
    std::vector<std::unique_ptr<Agent>> agents;

    std::vector<Agent*> pointers() const;
};

// Builds one agent per AP. For the llm policy without a backend_override this
// reads the gateway environment and fails fast when MAPC_LLM_BASE_URL is
// missing.
AgentSet make_agent_set(const RunConfig& config, int bss_count,
                        std::shared_ptr<ChatBackend> backend_override = nullptr);

// Packaged starting wisdom (also shipped as data/seed_exemplars.json).
// Embeddings are computed when the exemplars are loaded into an agent.
std::vector<Exemplar> builtin_seed_exemplars();
std::vector<Exemplar> parse_seed_exemplars(const std::string& json_text);

struct SeedRunResult {
    std::uint64_t seed = 0;
    TopologyScenario scenario;
    TxopResult txop;
    TxopMetrics metrics;
    std::string round_log;
};

struct ExperimentResult {
    std::vector<SeedRunResult> runs;  // seed order, independent of thread count
    AggregateStats throughput;
    AggregateStats collision_rate;
    AggregateStats idle_rate;
    AggregateStats group_score;
    std::string summary_csv;
};

ExperimentResult run_experiment(const RunConfig& config);

struct ReplayReport {
    ParsedRoundLog log;
    TxopMetrics metrics;
    bool scores_match = false;
    std::string mismatch;  // first divergence, empty when scores_match
};

// Re-derives every score from the logged schedules and states and checks the
// stored values.
ReplayReport replay_round_log(const std::string& text);

struct CoexistenceResult {
    LegacyStats with_txop;
    LegacyStats alone;
    std::vector<double> ratio;  // aligned with legacy_aps
    double min_ratio = 1.0;
};

// Legacy CSMA/CA throughput with and without an agentic TXOP window reserved
// by the group members over [0, txop_window_us].
CoexistenceResult run_coexistence(const TopologyScenario& scenario,
                                  const LargeScaleRealization& large_scale,
                                  const ChannelParams& channel, const LegacyConfig& legacy,
                                  const std::vector<int>& agentic_group,
                                  const std::vector<int>& legacy_aps, double txop_window_us,
                                  std::uint64_t master_seed);

struct BaselineSuiteResult {
    TxopMetrics genie;
    TxopMetrics heuristic;
    LegacyStats legacy;
    ObssPdSweepResult obss_pd;
    std::string summary;  // human-readable comparison
};

// One scenario, one seed: agentic policies against the non-agentic baselines.
BaselineSuiteResult run_baseline_suite(const RunConfig& config, std::uint64_t seed);

}  // namespace mapc
