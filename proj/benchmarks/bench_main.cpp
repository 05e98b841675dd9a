#include <benchmark/benchmark.h>

#include <memory>
#include <string>
#include <vector>

#include "mapc/agent.hpp"
#include "mapc/channel.hpp"
#include "mapc/gateway.hpp"
#include "mapc/mac.hpp"
#include "mapc/memory.hpp"
#include "mapc/rng.hpp"
#include "mapc/runner.hpp"
#include "mapc/topology.hpp"

using namespace mapc;

namespace {

const std::string kSituation =
    "ap=0 role=sharing rank=0 group=0,1 members=2 round=7/18 slots=5 "
    "weights=+1.0/-1.0/-0.5";

KnowledgeBase full_kb() {
    EmbeddingProvider embedder;
    KnowledgeBase kb(10, 0.85);
    for (int i = 0; i < 10; ++i) {
        Exemplar ex;
        ex.situation = kSituation + " variant=" + std::to_string(i);
        ex.action_bits = "10101";
        ex.strategy = "bench";
        ex.score = 1.0 + 0.1 * i;
        ex.reflection = "reuse ok; schedule 10101 clean";
        ex.embedding = embedder.embed(ex.situation);
        kb.seed(std::move(ex));
    }
    return kb;
}

}  // namespace

static void BM_OfflineEmbed(benchmark::State& state) {
    EmbeddingProvider embedder;
    for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(kSituation));
}
BENCHMARK(BM_OfflineEmbed);

static void BM_KbRetrieve(benchmark::State& state) {
    EmbeddingProvider embedder;
    auto kb = full_kb();
    auto query = embedder.embed(kSituation + " variant=4");
    for (auto _ : state) benchmark::DoNotOptimize(kb.retrieve(query, 3));
}
BENCHMARK(BM_KbRetrieve);

static void BM_KbUpdate(benchmark::State& state) {
    EmbeddingProvider embedder;
    auto kb = full_kb();
    std::vector<Exemplar> pool;
    for (int i = 0; i < 64; ++i) {
        Exemplar ex;
        ex.situation = kSituation + " candidate=" + std::to_string(i);
        ex.action_bits = "01010";
        ex.strategy = "bench";
        ex.score = 0.5 + 0.05 * i;
        ex.reflection = "r";
        ex.embedding = embedder.embed(ex.situation);
        pool.push_back(std::move(ex));
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kb.update(pool[i]));
        i = (i + 1) % pool.size();
    }
}
BENCHMARK(BM_KbUpdate);

static void BM_PathLoss(benchmark::State& state) {
    ChannelParams params;
    double d = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(path_loss_db(d, params));
        d = d < 50.0 ? d + 0.1 : 0.5;
    }
}
BENCHMARK(BM_PathLoss);

static void BM_NakagamiPower(benchmark::State& state) {
    RngStream rng(7, {RngStream::tag("bench"), 0});
    for (auto _ : state) benchmark::DoNotOptimize(rng.nakagami_power(1.5));
}
BENCHMARK(BM_NakagamiPower);

static void BM_LargeScale(benchmark::State& state) {
    auto scenario = generate_scenario(ScenarioKind::CoSrFavored, 3, 11);
    ChannelParams params;
    for (auto _ : state) {
        RngStream rng(7, {RngStream::tag("bench"), 1});
        benchmark::DoNotOptimize(build_large_scale(scenario, params, rng));
    }
}
BENCHMARK(BM_LargeScale);

static void BM_Contend(benchmark::State& state) {
    std::vector<int> contenders(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < contenders.size(); ++i) contenders[i] = static_cast<int>(i);
    MacParams params;
    RngStream rng(7, {RngStream::tag("bench"), 2});
    for (auto _ : state) benchmark::DoNotOptimize(contend(contenders, params, rng));
}
BENCHMARK(BM_Contend)->Arg(2)->Arg(4)->Arg(8);

static void BM_GenieSolver(benchmark::State& state) {
    int k = static_cast<int>(state.range(0));
    auto scenario = generate_scenario(ScenarioKind::CoSrFavored, k, 11);
    ChannelParams params;
    RngStream rng(7, {RngStream::tag("bench"), 3});
    auto ls = build_large_scale(scenario, params, rng);
    std::vector<int> group(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) group[static_cast<std::size_t>(i)] = i;
    for (auto _ : state)
        benchmark::DoNotOptimize(genie_group_schedules(group, 5, scenario, ls, params));
}
BENCHMARK(BM_GenieSolver)->Arg(2)->Arg(3);

static void BM_TxopHeuristic(benchmark::State& state) {
    RunConfig config;
    config.kind = ScenarioKind::CoTdmaFavored;
    config.bss_count = 2;
    config.policy = PolicyKind::Heuristic;
    auto scenario = generate_scenario(config.kind, config.bss_count, 11);
    RngStream rng(11, {RngStream::tag("bench"), 4});
    auto ls = build_large_scale(scenario, config.channel, rng);
    for (auto _ : state) {
        auto set = make_agent_set(config, config.bss_count);
        std::vector<Agent*> agents;
        for (auto& a : set.agents) agents.push_back(a.get());
        benchmark::DoNotOptimize(
            run_txop(scenario, ls, config.channel, config.txop, agents, {}, 11));
    }
}
BENCHMARK(BM_TxopHeuristic);

static void BM_LegacyTraffic(benchmark::State& state) {
    auto scenario = generate_scenario(ScenarioKind::CoTdmaFavored, 2, 11);
    ChannelParams params;
    RngStream rng(11, {RngStream::tag("bench"), 5});
    auto ls = build_large_scale(scenario, params, rng);
    LegacyConfig config;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_legacy_traffic(scenario, ls, params, config, {0, 1}, 11));
}
BENCHMARK(BM_LegacyTraffic);

BENCHMARK_MAIN();
