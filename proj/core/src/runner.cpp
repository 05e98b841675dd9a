#include "mapc/runner.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "mapc/errors.hpp"

namespace mapc {

using ordered_json = nlohmann::ordered_json;

namespace {

template <typename T>
void take(const ordered_json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

void take_topology(const ordered_json& j, TopologyParams& p) {
    take(j, "arena_m", p.arena_m);
    take(j, "sta_min_m", p.sta_min_m);
    take(j, "sta_max_m", p.sta_max_m);
    take(j, "tdma_ap_min_m", p.tdma_ap_min_m);
    take(j, "tdma_ap_max_m", p.tdma_ap_max_m);
    take(j, "tdma_cross_ratio", p.tdma_cross_ratio);
    take(j, "tdma_cross_cap_m", p.tdma_cross_cap_m);
    take(j, "sr_ap_min_m", p.sr_ap_min_m);
    take(j, "sr_ap_max_m", p.sr_ap_max_m);
    take(j, "random_ap_min_m", p.random_ap_min_m);
    take(j, "min_separation_m", p.min_separation_m);
    take(j, "max_attempts", p.max_attempts);
    take(j, "tx_power_dbm", p.tx_power_dbm);
}

void take_channel(const ordered_json& j, ChannelParams& p) {
    take(j, "carrier_freq_ghz", p.carrier_freq_ghz);
    take(j, "breakpoint_m", p.breakpoint_m);
    take(j, "shadowing_sigma_db", p.shadowing_sigma_db);
    take(j, "nakagami_m", p.nakagami_m);
    take(j, "noise_floor_dbm", p.noise_floor_dbm);
    take(j, "capture_threshold_db", p.capture_threshold_db);
}

void take_txop(const ordered_json& j, TxopConfig& p) {
    take(j, "rounds", p.rounds);
    take(j, "slots_per_round", p.slots_per_round);
    take(j, "slot_duration_us", p.slot_duration_us);
    take(j, "message_char_cap", p.message_char_cap);
    take(j, "parse_retries", p.parse_retries);
    take(j, "cca_dbm", p.cca_dbm);
    if (j.contains("weights")) {
        const ordered_json& w = j.at("weights");
        take(w, "success", p.weights.success);
        take(w, "collision", p.weights.collision);
        take(w, "idle", p.weights.idle);
    }
}

void take_agent(const ordered_json& j, AgentConfig& p) {
    take(j, "stm_window", p.stm_window);
    take(j, "kb_capacity", p.kb_capacity);
    take(j, "similarity_threshold", p.similarity_threshold);
    take(j, "retrieval_k", p.retrieval_k);
    take(j, "prompt_char_budget", p.prompt_char_budget);
    take(j, "temperature", p.temperature);
}

void take_ablations(const ordered_json& j, AblationFlags& p) {
    take(j, "no_reflection", p.no_reflection);
    take(j, "no_negotiation", p.no_negotiation);
    take(j, "no_stm", p.no_stm);
    take(j, "no_ltm", p.no_ltm);
}

void take_mac(const ordered_json& j, MacParams& p) {
    take(j, "slot_us", p.slot_us);
    take(j, "difs_us", p.difs_us);
    take(j, "cw_min", p.cw_min);
    take(j, "cw_max", p.cw_max);
    take(j, "cca_dbm", p.cca_dbm);
    take(j, "packet_airtime_us", p.packet_airtime_us);
}

constexpr const char* kSeedExemplarJson = R"json({
  "mapc_seed_exemplars": 1,
  "exemplars": [
    {
      "situation": "ap=0 role=sharing rank=0 group=0,1 members=2 round=1/18 slots=5 weights=+1.0/-1.0/-0.5",
      "action_bits": "10101",
      "strategy": "tdma-anchor",
      "score": 2.0,
      "reflection": "start from the rank partition; claim the anchor slots and publish the plan before anyone improvises"
    },
    {
      "situation": "ap=1 role=shared rank=1 group=0,1 members=2 round=3/18 slots=5 weights=+1.0/-1.0/-0.5",
      "action_bits": "01010",
      "strategy": "plan-adherence",
      "score": 1.8,
      "reflection": "stick to the published plan while it stays clean; an early deviation costs the whole group"
    },
    {
      "situation": "ap=1 role=shared rank=1 group=0,1 members=2 round=9/18 slots=5 weights=+1.0/-1.0/-0.5",
      "action_bits": "01110",
      "strategy": "probe-etiquette",
      "score": 1.5,
      "reflection": "grow by one extra slot at a time and retreat on the first loss"
    },
    {
      "situation": "ap=2 role=shared rank=2 group=0,1,2 members=3 round=12/18 slots=5 weights=+1.0/-1.0/-0.5",
      "action_bits": "11111",
      "strategy": "wide-reuse",
      "score": 1.0,
      "reflection": "full reuse pays only when every neighbor is weak; hold two clean rounds before going wide"
    }
  ]
})json";

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw InfeasibleConfiguration(std::string("run config: bad JSON: ") + e.what());
    }
    RunConfig c;
    if (j.contains("scenario"))
        c.kind = scenario_kind_from_string(j.at("scenario").get<std::string>());
    take(j, "bss_count", c.bss_count);
    if (j.contains("policy"))
        c.policy = policy_kind_from_string(j.at("policy").get<std::string>());
    if (j.contains("topology")) take_topology(j.at("topology"), c.topology);
    if (j.contains("channel")) take_channel(j.at("channel"), c.channel);
    if (j.contains("txop")) take_txop(j.at("txop"), c.txop);
    if (j.contains("agent")) take_agent(j.at("agent"), c.agent);
    if (j.contains("ablations")) take_ablations(j.at("ablations"), c.ablations);
    if (j.contains("mac")) take_mac(j.at("mac"), c.mac);
    take(j, "seeds", c.seeds);
    take(j, "scenario_file", c.scenario_file);
    take(j, "out_dir", c.out_dir);
    take(j, "kb_in", c.kb_in);
    take(j, "kb_out", c.kb_out);
    take(j, "seed_kb", c.seed_kb);
    take(j, "threads", c.threads);
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    ordered_json j;
    j["scenario"] = to_string(c.kind);
    j["bss_count"] = c.bss_count;
    j["policy"] = to_string(c.policy);
    j["topology"] = {{"arena_m", c.topology.arena_m},
                     {"sta_min_m", c.topology.sta_min_m},
                     {"sta_max_m", c.topology.sta_max_m},
                     {"tdma_ap_min_m", c.topology.tdma_ap_min_m},
                     {"tdma_ap_max_m", c.topology.tdma_ap_max_m},
                     {"tdma_cross_ratio", c.topology.tdma_cross_ratio},
                     {"tdma_cross_cap_m", c.topology.tdma_cross_cap_m},
                     {"sr_ap_min_m", c.topology.sr_ap_min_m},
                     {"sr_ap_max_m", c.topology.sr_ap_max_m},
                     {"random_ap_min_m", c.topology.random_ap_min_m},
                     {"min_separation_m", c.topology.min_separation_m},
                     {"max_attempts", c.topology.max_attempts},
                     {"tx_power_dbm", c.topology.tx_power_dbm}};
    j["channel"] = {{"carrier_freq_ghz", c.channel.carrier_freq_ghz},
                    {"breakpoint_m", c.channel.breakpoint_m},
                    {"shadowing_sigma_db", c.channel.shadowing_sigma_db},
                    {"nakagami_m", c.channel.nakagami_m},
                    {"noise_floor_dbm", c.channel.noise_floor_dbm},
                    {"capture_threshold_db", c.channel.capture_threshold_db}};
    j["txop"] = {{"rounds", c.txop.rounds},
                 {"slots_per_round", c.txop.slots_per_round},
                 {"slot_duration_us", c.txop.slot_duration_us},
                 {"message_char_cap", c.txop.message_char_cap},
                 {"parse_retries", c.txop.parse_retries},
                 {"cca_dbm", c.txop.cca_dbm},
                 {"weights",
                  {{"success", c.txop.weights.success},
                   {"collision", c.txop.weights.collision},
                   {"idle", c.txop.weights.idle}}}};
    j["agent"] = {{"stm_window", c.agent.stm_window},
                  {"kb_capacity", c.agent.kb_capacity},
                  {"similarity_threshold", c.agent.similarity_threshold},
                  {"retrieval_k", c.agent.retrieval_k},
                  {"prompt_char_budget", c.agent.prompt_char_budget},
                  {"temperature", c.agent.temperature}};
    j["ablations"] = {{"no_reflection", c.ablations.no_reflection},
                      {"no_negotiation", c.ablations.no_negotiation},
                      {"no_stm", c.ablations.no_stm},
                      {"no_ltm", c.ablations.no_ltm}};
    j["mac"] = {{"slot_us", c.mac.slot_us},
                {"difs_us", c.mac.difs_us},
                {"cw_min", c.mac.cw_min},
                {"cw_max", c.mac.cw_max},
                {"cca_dbm", c.mac.cca_dbm},
                {"packet_airtime_us", c.mac.packet_airtime_us}};
    j["seeds"] = c.seeds;
    j["scenario_file"] = c.scenario_file;
    j["out_dir"] = c.out_dir;
    j["kb_in"] = c.kb_in;
    j["kb_out"] = c.kb_out;
    j["seed_kb"] = c.seed_kb;
    j["threads"] = c.threads;
    return j.dump(2);
}

void apply_ablation(RunConfig& config, const std::string& name) {
    if (name == "no_reflection")
        config.ablations.no_reflection = true;
    else if (name == "no_negotiation")
        config.ablations.no_negotiation = true;
    else if (name == "no_stm")
        config.ablations.no_stm = true;
    else if (name == "no_ltm")
        config.ablations.no_ltm = true;
    else
        throw std::invalid_argument("unknown ablation: " + name);
}

std::vector<Agent*> AgentSet::pointers() const {
    std::vector<Agent*> out;
    out.reserve(agents.size());
    for (const auto& a : agents) out.push_back(a.get());
    return out;
}

std::vector<Exemplar> parse_seed_exemplars(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw InfeasibleConfiguration(std::string("seed exemplars: bad JSON: ") + e.what());
    }
    if (j.value("mapc_seed_exemplars", 0) != 1)
        throw InfeasibleConfiguration("seed exemplars: missing version marker");
    std::vector<Exemplar> out;
    for (const ordered_json& e : j.at("exemplars")) {
        Exemplar ex;
        ex.situation = e.at("situation").get<std::string>();
        ex.action_bits = e.at("action_bits").get<std::string>();
        ex.strategy = e.at("strategy").get<std::string>();
        ex.score = e.at("score").get<double>();
        ex.reflection = e.value("reflection", std::string());
        out.push_back(std::move(ex));  // embedding filled on load
    }
    return out;
}

std::vector<Exemplar> builtin_seed_exemplars() {
    return parse_seed_exemplars(kSeedExemplarJson);
}

AgentSet make_agent_set(const RunConfig& config, int bss_count,
                        std::shared_ptr<ChatBackend> backend_override) {
    AgentSet set;
    std::shared_ptr<HttpChatBackend> http;
    std::string model;
    if (config.policy == PolicyKind::Llm) {
        if (backend_override) {
            set.backend = backend_override;
            model = "mock";
        } else {
            HttpGatewayConfig gateway = gateway_config_from_env();
            if (gateway.base_url.empty())
                throw InfeasibleConfiguration(
                    "MAPC_LLM_BASE_URL is not set; the llm policy needs a gateway");
            http = std::make_shared<HttpChatBackend>(gateway);
            model = gateway.model;
            if (!config.out_dir.empty()) {
                std::filesystem::create_directories(config.out_dir);
                auto file = std::make_shared<std::ofstream>(
                    std::filesystem::path(config.out_dir) / "transcripts.jsonl",
                    std::ios::app);
                auto sink = [file](const TranscriptEntry& entry) {
                    ordered_json j;
                    j["timestamp"] = entry.timestamp_utc;
                    j["agent"] = entry.agent_id;
                    j["round"] = entry.round;
                    j["request_hash"] = entry.request_hash;
                    j["response"] = entry.response_text;
                    j["latency_ms"] = entry.latency_ms;
                    (*file) << j.dump() << "\n";
                    file->flush();
                };
                set.backend = std::make_shared<TranscribingBackend>(http, sink);
            } else {
                set.backend = http;
            }
            if (!gateway.embed_model.empty())
                set.embedder = std::make_shared<EmbeddingProvider>(http);
        }
    }
    if (!set.embedder) set.embedder = std::make_shared<EmbeddingProvider>();

    for (int ap = 0; ap < bss_count; ++ap) {
        auto policy = make_policy(config.policy, set.backend, model, config.agent.temperature,
                                  config.txop.parse_retries);
        set.agents.push_back(std::make_unique<Agent>(ap, config.agent, config.ablations,
                                                     std::move(policy), set.embedder.get()));
    }
    return set;
}

namespace {

TopologyScenario scenario_for(const RunConfig& config, std::uint64_t seed) {
    if (!config.scenario_file.empty()) {
        std::ifstream in(config.scenario_file);
        if (!in) throw InfeasibleConfiguration("cannot open scenario file: " +
                                               config.scenario_file);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_scenario(buffer.str());
    }
    return generate_scenario(config.kind, config.bss_count, seed, config.topology);
}

void load_kb_bundle(const std::string& path, AgentSet& set) {
    std::ifstream in(path);
    if (!in) throw InfeasibleConfiguration("cannot open knowledge bundle: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    ordered_json j;
    try {
        j = ordered_json::parse(buffer.str());
    } catch (const std::exception& e) {
        throw InfeasibleConfiguration(std::string("knowledge bundle: bad JSON: ") + e.what());
    }
    if (j.value("mapc_kb_bundle", 0) != 1)
        throw InfeasibleConfiguration("knowledge bundle: missing version marker");
    const ordered_json& aps = j.at("aps");
    for (auto& agent : set.agents) {
        std::string key = std::to_string(agent->id());
        if (aps.contains(key))
            agent->knowledge() = KnowledgeBase::deserialize(aps.at(key).dump());
    }
}

void save_kb_bundle(const std::string& path, const AgentSet& set) {
    ordered_json j;
    j["mapc_kb_bundle"] = 1;
    ordered_json aps = ordered_json::object();
    for (const auto& agent : set.agents)
        aps[std::to_string(agent->id())] = ordered_json::parse(agent->knowledge().serialize());
    j["aps"] = aps;
    std::ofstream out(path);
    if (!out) throw InfeasibleConfiguration("cannot write knowledge bundle: " + path);
    out << j.dump(2) << "\n";
}

std::string run_file_stem(const RunConfig& config, std::uint64_t seed) {
    std::ostringstream os;
    os << to_string(config.kind) << "_" << to_string(config.policy) << "_seed" << seed;
    return os.str();
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config) {
    if (config.seeds.empty()) throw InfeasibleConfiguration("run_experiment: no seeds");
    config.channel.validate();
    config.mac.validate();

    ExperimentResult result;
    result.runs.resize(config.seeds.size());
    std::vector<std::exception_ptr> errors(config.seeds.size());

    // agents carry state between rounds, so every seed gets a fresh set
    auto run_one = [&](std::size_t index) {
        std::uint64_t seed = config.seeds[index];
        SeedRunResult run;
        run.seed = seed;
        run.scenario = scenario_for(config, seed);
        RngStream shadowing_rng(seed, {RngStream::tag("shadowing")});
        LargeScaleRealization large_scale =
            build_large_scale(run.scenario, config.channel, shadowing_rng);
        AgentSet set = make_agent_set(config, run.scenario.bss_count);
        if (config.seed_kb) {
            std::vector<Exemplar> seeds_kb = builtin_seed_exemplars();
            for (auto& agent : set.agents) agent->seed_knowledge(seeds_kb);
        }
        if (!config.kb_in.empty()) load_kb_bundle(config.kb_in, set);
        run.txop = run_txop(run.scenario, large_scale, config.channel, config.txop,
                            set.pointers(), config.ablations, seed);
        run.metrics = summarize_txop(run.txop);
        run.round_log = render_round_log(run.txop, run.scenario, config.channel, config.txop,
                                         config.policy, config.ablations, seed);
        if (!config.kb_out.empty() && index + 1 == config.seeds.size())
            save_kb_bundle(config.kb_out, set);
        result.runs[index] = std::move(run);
    };

    int workers = config.policy == PolicyKind::Llm ? 1 : config.threads;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(config.seeds.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < config.seeds.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= config.seeds.size()) return;
                try {
                    run_one(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    std::vector<double> throughputs, collisions, idles, scores;
    std::ostringstream csv;
    csv << metrics_csv_header() << "\n";
    for (const SeedRunResult& run : result.runs) {
        throughputs.push_back(run.metrics.total_throughput);
        collisions.push_back(run.metrics.collision_rate);
        idles.push_back(run.metrics.idle_rate);
        scores.push_back(run.metrics.mean_group_score);
        csv << metrics_csv_row(config.kind, config.policy, run.seed, run.metrics) << "\n";
    }
    result.throughput = aggregate(throughputs);
    result.collision_rate = aggregate(collisions);
    result.idle_rate = aggregate(idles);
    result.group_score = aggregate(scores);
    result.summary_csv = csv.str();

    if (!config.out_dir.empty()) {
        std::filesystem::path dir(config.out_dir);
        std::filesystem::create_directories(dir);
        {
            std::ofstream out(dir / "summary.csv");
            out << result.summary_csv;
        }
        for (const SeedRunResult& run : result.runs) {
            std::string stem = run_file_stem(config, run.seed);
            {
                std::ofstream out(dir / ("rounds_" + stem + ".jsonl"));
                out << run.round_log;
            }
            {
                std::ofstream out(dir / ("heat_" + stem + ".csv"));
                out << heatmap_csv(run.txop);
            }
        }
    }
    return result;
}

ReplayReport replay_round_log(const std::string& text) {
    ReplayReport report;
    report.log = parse_round_log(text);
    report.scores_match = true;
    for (const RoundOutcome& round : report.log.result.rounds) {
        ScoreResult recomputed =
            score_round(round.schedules, round.states, report.log.config.weights);
        bool ok = recomputed.group == round.group_score &&
                  recomputed.per_ap.size() == round.scores.size();
        for (std::size_t g = 0; ok && g < round.scores.size(); ++g)
            ok = recomputed.per_ap[g] == round.scores[g];
        if (!ok && report.scores_match) {
            report.scores_match = false;
            std::ostringstream os;
            os << "round " << round.round << ": stored scores diverge from the replayed rule";
            report.mismatch = os.str();
        }
    }
    report.metrics = summarize_txop(report.log.result);
    return report;
}

CoexistenceResult run_coexistence(const TopologyScenario& scenario,
                                  const LargeScaleRealization& large_scale,
                                  const ChannelParams& channel, const LegacyConfig& legacy,
                                  const std::vector<int>& agentic_group,
                                  const std::vector<int>& legacy_aps, double txop_window_us,
                                  std::uint64_t master_seed) {
    if (legacy_aps.empty()) throw std::invalid_argument("run_coexistence: no legacy APs");
    LegacyConfig with = legacy;
    for (int ap : agentic_group) with.reservations.push_back({0.0, txop_window_us, ap});
    CoexistenceResult result;
    result.with_txop =
        run_legacy_traffic(scenario, large_scale, channel, with, legacy_aps, master_seed);
    result.alone =
        run_legacy_traffic(scenario, large_scale, channel, legacy, legacy_aps, master_seed);
    for (int ap : legacy_aps) {
        double alone = result.alone.utilization[ap];
        double with_util = result.with_txop.utilization[ap];
        double ratio = alone > 0.0 ? with_util / alone : 1.0;
        result.ratio.push_back(ratio);
        result.min_ratio = std::min(result.min_ratio, ratio);
    }
    return result;
}

BaselineSuiteResult run_baseline_suite(const RunConfig& config, std::uint64_t seed) {
    BaselineSuiteResult result;
    RunConfig base = config;
    base.seeds = {seed};
    base.out_dir.clear();
    base.kb_out.clear();

    TopologyScenario scenario = scenario_for(base, seed);
    RngStream shadowing_rng(seed, {RngStream::tag("shadowing")});
    LargeScaleRealization large_scale = build_large_scale(scenario, base.channel, shadowing_rng);

    auto run_policy = [&](PolicyKind kind) {
        RunConfig c = base;
        c.policy = kind;
        AgentSet set = make_agent_set(c, scenario.bss_count);
        if (c.seed_kb) {
            std::vector<Exemplar> seeds_kb = builtin_seed_exemplars();
            for (auto& agent : set.agents) agent->seed_knowledge(seeds_kb);
        }
        TxopResult txop = run_txop(scenario, large_scale, c.channel, c.txop, set.pointers(),
                                   c.ablations, seed);
        return summarize_txop(txop);
    };
    result.genie = run_policy(PolicyKind::Genie);
    result.heuristic = run_policy(PolicyKind::Heuristic);

    LegacyConfig legacy;
    legacy.mac = base.mac;
    legacy.sense_threshold_dbm = base.mac.cca_dbm;
    std::vector<int> everyone(scenario.bss_count);
    for (int i = 0; i < scenario.bss_count; ++i) everyone[i] = i;
    result.legacy =
        run_legacy_traffic(scenario, large_scale, base.channel, legacy, everyone, seed);
    result.obss_pd =
        sweep_obss_pd(scenario, large_scale, base.channel, legacy, everyone, seed);

    std::ostringstream os;
    os << "scenario=" << to_string(scenario.kind) << " k=" << scenario.bss_count
       << " seed=" << seed << "\n";
    os << "genie:     throughput=" << result.genie.total_throughput
       << " collisions=" << result.genie.collision_rate << "\n";
    os << "heuristic: throughput=" << result.heuristic.total_throughput
       << " collisions=" << result.heuristic.collision_rate << "\n";
    os << "legacy csma/ca: utilization=" << result.legacy.total_utilization << "\n";
    if (result.obss_pd.best_index >= 0) {
        const ObssPdSweepPoint& best = result.obss_pd.grid[result.obss_pd.best_index];
        os << "obss/pd best: threshold=" << best.threshold_dbm << " dBm power="
           << best.power_dbm << " dBm utilization=" << best.total_utilization << "\n";
    }
    result.summary = os.str();
    return result;
}

}  // namespace mapc
