#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "mapc/agent.hpp"
#include "mapc/rng.hpp"

using namespace mapc;

namespace {

EmbeddingProvider g_embedder;

std::unique_ptr<Agent> make_agent(int ap, PolicyKind kind, AblationFlags flags = {},
                                  AgentConfig config = {}) {
    return std::make_unique<Agent>(ap, config, flags, make_policy(kind), &g_embedder);
}

RoundContext make_ctx(int round, int rank, std::vector<int> group, int slots = 5,
                      int total = 18) {
    RoundContext ctx;
    ctx.round = round;
    ctx.total_rounds = total;
    ctx.num_slots = slots;
    ctx.role = rank == 0 ? Role::Sharing : Role::Shared;
    ctx.group = std::move(group);
    ctx.rank = rank;
    return ctx;
}

RoundOutcome make_outcome(int round, const std::vector<int>& group,
                          const std::vector<std::string>& bits,
                          const std::vector<std::string>& states) {
    RoundOutcome o;
    o.round = round;
    o.group = group;
    for (std::size_t i = 0; i < bits.size(); ++i)
        o.schedules.push_back(TransmissionSchedule::from_bits(group[i], bits[i]));
    for (const auto& row : states) {
        std::vector<SlotState> r;
        for (char c : row) r.push_back(slot_state_from_char(c));
        o.states.push_back(r);
    }
    ScoreResult sr = score_round(o.schedules, o.states, ScoreWeights{});
    o.scores = sr.per_ap;
    o.group_score = sr.group;
    return o;
}

}  // namespace

TEST_CASE("decision block parses the documented grammar") {
    auto r = parse_decision("DECISION\nschedule: 10101\nmessage: hi\nreflection: ok\nEND\n", 5);
    REQUIRE(r.ok);
    CHECK(TransmissionSchedule{0, r.decision.slots}.bits() == "10101");
    CHECK(r.decision.message == "hi");
    CHECK(r.decision.reflection == "ok");

    SUBCASE("text before the block and unknown lines are tolerated") {
        auto ok = parse_decision(
            "Sure, here's my plan.\nDECISION\nnote: thinking\nschedule: 11111\nEND", 5);
        REQUIRE(ok.ok);
        CHECK(ok.decision.message.empty());
    }
    SUBCASE("first message wins, duplicates ignored") {
        auto ok = parse_decision(
            "DECISION\nschedule: 10101\nmessage: one\nmessage: two\nEND", 5);
        REQUIRE(ok.ok);
        CHECK(ok.decision.message == "one");
    }
    SUBCASE("failure reasons are specific") {
        CHECK(parse_decision("no block here", 5).error == "missing DECISION line");
        CHECK(parse_decision("DECISION\nschedule: 101\nEND", 5).error ==
              "schedule must be exactly 5 characters of 0/1");
        CHECK(parse_decision("DECISION\nschedule: 1010x\nEND", 5).error ==
              "schedule must be exactly 5 characters of 0/1");
        CHECK(parse_decision("DECISION\nschedule: 10101\nschedule: 11111\nEND", 5).error ==
              "duplicate schedule line");
        CHECK(parse_decision("DECISION\nschedule: 10101\n", 5).error == "missing END line");
        CHECK(parse_decision("DECISION\nmessage: m\nEND", 5).error == "missing schedule line");
    }
}

TEST_CASE("render_decision round-trips through the parser") {
    AgentDecision d;
    d.slots = {1, 0, 1, 1, 0};
    d.message = "level=1 streak=0 base=10100";
    d.reflection = "clean; schedule 10110 held";
    auto r = parse_decision(render_decision(d), 5);
    REQUIRE(r.ok);
    CHECK(r.decision.slots == d.slots);
    CHECK(r.decision.message == d.message);
    CHECK(r.decision.reflection == d.reflection);
}

TEST_CASE("suggestion tokens round-trip and tolerate noise") {
    std::map<int, std::vector<std::uint8_t>> plan = {{0, {1, 0, 1, 0, 1}}, {2, {0, 1, 0, 1, 0}}};
    std::string body = "plan: " + render_suggestions(plan);
    auto got = parse_suggestions(body, 5);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == plan[0]);
    CHECK(got[2] == plan[2]);

    // wrong-length entries are skipped, later entries win
    got = parse_suggestions("ap1=111 ap1=00011 stuff ap1=11000", 5);
    REQUIRE(got.size() == 1);
    CHECK(TransmissionSchedule{1, got[1]}.bits() == "11000");

    CHECK(parse_suggestions("no tokens", 5).empty());
}

TEST_CASE("situation line is the frozen retrieval key format") {
    auto ctx = make_ctx(6, 0, {0, 1});
    CHECK(render_situation(0, ctx) ==
          "ap=0 role=sharing rank=0 group=0,1 members=2 round=7/18 slots=5 weights=+1.0/-1.0/-0.5");
    auto ctx2 = make_ctx(0, 1, {2, 0, 1});
    CHECK(render_situation(0, ctx2) ==
          "ap=0 role=shared rank=1 group=2,0,1 members=3 round=1/18 slots=5 weights=+1.0/-1.0/-0.5");
}

TEST_CASE("outcome rendering reports own row, peers optional") {
    auto o = make_outcome(2, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
    auto full = render_transmission_outcome(0, o, true);
    CHECK(full ==
          "outcome r3: own=10101 states=SISIS score=3.0 group=5.0 idle_slots=0 ap1=01010/ISISI");
    auto blind = render_transmission_outcome(0, o, false);
    CHECK(blind == "outcome r3: own=10101 states=SISIS score=3.0 group=5.0 idle_slots=0");
    CHECK_THROWS(render_transmission_outcome(7, o));
}

TEST_CASE("evaluation line tracks the last visible round and trend") {
    auto agent = make_agent(0, PolicyKind::Heuristic);
    auto ctx = make_ctx(0, 0, {0, 1});
    CHECK(render_evaluation(0, ctx, agent->stm()) == "evaluation: first round, no history");

    auto o1 = make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
    AgentDecision d;
    d.slots = {1, 0, 1, 0, 1};
    d.strategy = "level=0";
    agent->observe_round(o1, ctx, d);
    auto line = render_evaluation(0, make_ctx(1, 0, {0, 1}), agent->stm());
    CHECK(line == "evaluation: last score=3.0 (3 success, 0 collision), trend=n/a");

    auto o2 = make_outcome(1, {0, 1}, {"10101", "01110"}, {"SICIS", "ICCSI"});
    agent->observe_round(o2, ctx, d);
    line = render_evaluation(0, make_ctx(2, 0, {0, 1}), agent->stm());
    CHECK(line.find("trend=declining") != std::string::npos);
}

TEST_CASE("heuristic starts conservative and publishes the plan") {
    auto agent = make_agent(0, PolicyKind::Heuristic);
    auto ctx = make_ctx(0, 0, {0, 1});
    auto d = agent->decide_round(ctx);
    CHECK(TransmissionSchedule{0, d.slots}.bits() == "10101");
    CHECK(d.message.find("plan: ap0=10101 ap1=01010") != std::string::npos);
    CHECK(d.strategy == "level=0");
    CHECK_FALSE(d.fallback);
}

TEST_CASE("shared heuristic adopts the sharing AP's plan") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    auto ctx = make_ctx(0, 1, {0, 1});
    CoordinationMessage proposal;
    proposal.kind = CoordinationMessage::Kind::Proposal;
    proposal.sender_ap = 0;
    proposal.round = 0;
    proposal.body = "level=0 streak=0 base=10101 plan: ap0=10101 ap1=01100";
    ctx.inbox.push_back(proposal);
    auto d = agent->decide_round(ctx);
    CHECK(TransmissionSchedule{1, d.slots}.bits() == "01100");
}

TEST_CASE("heuristic escalates after two clean rounds and probes one extra slot") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    for (int r = 0; r < 2; ++r) {
        auto ctx = make_ctx(r, 1, {0, 1});
        auto d = agent->decide_round(ctx);
        CHECK(TransmissionSchedule{1, d.slots}.bits() == "01010");
        auto o = make_outcome(r, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
        agent->observe_round(o, ctx, d);
    }
    // two clean rounds seen: level 1, base plus the lowest free non-base slot
    auto ctx = make_ctx(2, 1, {0, 1});
    auto d = agent->decide_round(ctx);
    CHECK(d.strategy == "level=1 probe=0");
    CHECK(TransmissionSchedule{1, d.slots}.bits() == "11010");
}

TEST_CASE("heuristic retreats to conservative after repeated collisions") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    // r0 clean, r1 clean -> r2 probes; feed two collided probe rounds
    auto ctx0 = make_ctx(0, 1, {0, 1});
    auto d0 = agent->decide_round(ctx0);
    agent->observe_round(make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}), ctx0, d0);
    auto ctx1 = make_ctx(1, 1, {0, 1});
    auto d1 = agent->decide_round(ctx1);
    agent->observe_round(make_outcome(1, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}), ctx1, d1);

    auto ctx2 = make_ctx(2, 1, {0, 1});
    auto d2 = agent->decide_round(ctx2);
    REQUIRE(d2.strategy == "level=1 probe=0");
    agent->observe_round(make_outcome(2, {0, 1}, {"10101", "11010"}, {"CISIS", "CSISI"}), ctx2, d2);

    // collision: drop a level, cooldown suppresses the immediate next probe
    auto ctx3 = make_ctx(3, 1, {0, 1});
    auto d3 = agent->decide_round(ctx3);
    CHECK(d3.strategy == "level=0");
    agent->observe_round(make_outcome(3, {0, 1}, {"10101", "11010"}, {"CISIS", "CSISI"}), ctx3, d3);

    auto ctx4 = make_ctx(4, 1, {0, 1});
    auto d4 = agent->decide_round(ctx4);
    CHECK(d4.strategy == "level=0");
}

TEST_CASE("probe avoids slots that recently collided") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    auto ctx0 = make_ctx(0, 1, {0, 1});
    auto d0 = agent->decide_round(ctx0);
    // own probe-free round, but slot 0 (probe candidate) burned in history
    agent->observe_round(make_outcome(0, {0, 1}, {"10101", "11010"}, {"SISIS", "CSISI"}), ctx0, d0);
    auto ctx1 = make_ctx(1, 1, {0, 1});
    auto d1 = agent->decide_round(ctx1);
    agent->observe_round(make_outcome(1, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}), ctx1, d1);
    auto ctx2 = make_ctx(2, 1, {0, 1});
    auto d2 = agent->decide_round(ctx2);
    agent->observe_round(make_outcome(2, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}), ctx2, d2);
    auto ctx3 = make_ctx(3, 1, {0, 1});
    auto d3 = agent->decide_round(ctx3);
    // slot 0 collided within the last 3 visible rows -> next free slot is 2
    CHECK(d3.strategy == "level=1 probe=2");
}

TEST_CASE("a proven full-reuse lesson warm-restarts the ladder") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    Exemplar ex;
    ex.situation =
        "ap=1 role=shared rank=1 group=0,1 members=2 round=2/18 slots=5 weights=+1.0/-1.0/-0.5";
    ex.action_bits = "11111";
    ex.strategy = "level=2";
    ex.score = 4.0;
    ex.reflection = "reuse ok; schedule 11111 clean";
    agent->seed_knowledge({ex});

    auto ctx0 = make_ctx(0, 1, {0, 1});
    auto d0 = agent->decide_round(ctx0);
    CHECK(d0.strategy == "level=0");  // round 0 always resets the ladder
    agent->observe_round(make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}), ctx0,
                         d0);

    auto d1 = agent->decide_round(make_ctx(1, 1, {0, 1}));
    CHECK(d1.strategy == "level=2");
    CHECK(TransmissionSchedule{1, d1.slots}.bits() == "11111");
}

TEST_CASE("a paid-off probe lesson shortcuts to full reuse") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    Exemplar ex;
    ex.situation =
        "ap=1 role=shared rank=1 group=0,1 members=2 round=4/18 slots=5 weights=+1.0/-1.0/-0.5";
    ex.action_bits = "11010";
    ex.strategy = "level=1 probe=0";
    ex.score = 2.5;
    ex.reflection = "reuse ok; schedule 11010 clean";
    agent->seed_knowledge({ex});

    for (int r = 0; r < 2; ++r) {
        auto ctx = make_ctx(r, 1, {0, 1});
        auto d = agent->decide_round(ctx);
        agent->observe_round(make_outcome(r, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"}),
                             ctx, d);
    }
    auto ctx2 = make_ctx(2, 1, {0, 1});
    auto d2 = agent->decide_round(ctx2);
    REQUIRE(d2.strategy == "level=1 probe=0");
    agent->observe_round(make_outcome(2, {0, 1}, {"10101", "11010"}, {"SISIS", "SSISI"}), ctx2,
                         d2);

    // streak is only 1, but the retrieved lesson vouches for the probe
    auto d3 = agent->decide_round(make_ctx(3, 1, {0, 1}));
    CHECK(d3.strategy == "level=2");
    CHECK(TransmissionSchedule{1, d3.slots}.bits() == "11111");
}

TEST_CASE("scripted policy replays texts and falls back on garbage") {
    std::vector<std::string> scripts = {
        "DECISION\nschedule: 00110\nmessage: scripted\nEND",
        "not a decision at all",
    };
    AgentConfig config;
    AblationFlags flags;
    auto agent = std::make_unique<Agent>(
        0, config, flags, std::make_unique<ScriptedPolicy>(scripts), &g_embedder);

    auto ctx = make_ctx(0, 0, {0, 1});
    auto d = agent->decide_round(ctx);
    CHECK(TransmissionSchedule{0, d.slots}.bits() == "00110");
    CHECK_FALSE(d.fallback);

    d = agent->decide_round(make_ctx(1, 0, {0, 1}));
    CHECK(d.fallback);
    CHECK(TransmissionSchedule{0, d.slots}.bits() == "10101");  // rank partition

    // queue exhausted: fallback again
    d = agent->decide_round(make_ctx(2, 0, {0, 1}));
    CHECK(d.fallback);
}

TEST_CASE("llm policy uses the reply, retries malformed output, then falls back") {
    SUBCASE("clean reply") {
        auto mock = std::make_shared<MockChatBackend>();
        mock->push_response("DECISION\nschedule: 01010\nmessage: m\nreflection: r\nEND");
        AgentConfig config;
        auto agent = std::make_unique<Agent>(
            1, config, AblationFlags{},
            std::make_unique<LlmPolicy>(mock, "test-model"), &g_embedder);
        auto d = agent->decide_round(make_ctx(0, 1, {0, 1}));
        CHECK(TransmissionSchedule{1, d.slots}.bits() == "01010");
        CHECK(d.strategy == "llm");
        CHECK(mock->calls() == 1);
    }
    SUBCASE("one malformed reply, then corrected") {
        auto mock = std::make_shared<MockChatBackend>();
        mock->push_response("oops");
        mock->push_response("DECISION\nschedule: 01010\nEND");
        auto agent = std::make_unique<Agent>(
            1, AgentConfig{}, AblationFlags{},
            std::make_unique<LlmPolicy>(mock, "test-model"), &g_embedder);
        auto d = agent->decide_round(make_ctx(0, 1, {0, 1}));
        CHECK_FALSE(d.fallback);
        CHECK(TransmissionSchedule{1, d.slots}.bits() == "01010");
        CHECK(mock->calls() == 2);
    }
    SUBCASE("persistently malformed: deterministic fallback") {
        auto mock = std::make_shared<MockChatBackend>();
        mock->set_default_generator([](const ChatRequest&) { return "never valid"; });
        auto policy = std::make_unique<LlmPolicy>(mock, "test-model", 0.2, 2);
        auto* policy_view = policy.get();
        auto agent = std::make_unique<Agent>(1, AgentConfig{}, AblationFlags{},
                                             std::move(policy), &g_embedder);
        auto d = agent->decide_round(make_ctx(0, 1, {0, 1}));
        CHECK(d.fallback);
        CHECK(d.strategy == "llm-fallback");
        CHECK(TransmissionSchedule{1, d.slots}.bits() == "01010");
        CHECK(mock->calls() == 3);  // initial + 2 retries
        CHECK(policy_view->fallback_count() == 1);
    }
    SUBCASE("gateway error: immediate fallback, no retry storm") {
        auto mock = std::make_shared<MockChatBackend>();
        mock->push_fault(GatewayErrorKind::Transport, "down");
        auto agent = std::make_unique<Agent>(
            1, AgentConfig{}, AblationFlags{},
            std::make_unique<LlmPolicy>(mock, "test-model"), &g_embedder);
        auto d = agent->decide_round(make_ctx(0, 1, {0, 1}));
        CHECK(d.fallback);
        CHECK(mock->calls() == 1);
    }
}

TEST_CASE("observe_round files the round into stm and the knowledge base") {
    auto agent = make_agent(0, PolicyKind::Heuristic);
    auto ctx = make_ctx(0, 0, {0, 1});
    auto o = make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
    AgentDecision d;
    d.slots = {1, 0, 1, 0, 1};
    d.strategy = "level=0";
    agent->observe_round(o, ctx, d);

    REQUIRE(agent->stm().records().size() == 1);
    const auto& rec = agent->stm().records().front();
    CHECK(rec.group == std::vector<int>{0, 1});
    CHECK(rec.schedules[0] == "10101");
    CHECK(rec.scores[0] == 3.0);

    REQUIRE(agent->knowledge().size() == 1);
    const auto& ex = agent->knowledge().entries()[0];
    CHECK(ex.action_bits == "10101");
    CHECK(ex.score == 3.0);
    CHECK(ex.strategy == "level=0");
    CHECK(ex.reflection == "clean; schedule 10101 held");
}

TEST_CASE("synthesized reflections use the frozen token grammar") {
    auto agent = make_agent(0, PolicyKind::Heuristic);
    auto ctx = make_ctx(0, 0, {0, 1});

    SUBCASE("collision names the first bad slot") {
        auto o = make_outcome(0, {0, 1}, {"10101", "11010"}, {"CISIS", "CSISI"});
        AgentDecision d;
        d.strategy = "level=0";
        agent->observe_round(o, ctx, d);
        CHECK(agent->knowledge().entries()[0].reflection == "collided in 1 slots; avoid slot 0");
    }
    SUBCASE("clean probe round records the reuse token") {
        auto o = make_outcome(0, {0, 1}, {"11101", "01010"}, {"SSSIS", "ISISI"});
        AgentDecision d;
        d.strategy = "level=1 probe=1";
        agent->observe_round(o, ctx, d);
        CHECK(agent->knowledge().entries()[0].reflection == "reuse ok; schedule 11101 clean");
    }
    SUBCASE("explicit reflection from the policy wins") {
        auto o = make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
        AgentDecision d;
        d.strategy = "llm";
        d.reflection = "my own lesson";
        agent->observe_round(o, ctx, d);
        CHECK(agent->knowledge().entries()[0].reflection == "my own lesson");
    }
}

TEST_CASE("ablations blind exactly their own channel") {
    auto ctx = make_ctx(0, 0, {0, 1});
    auto o = make_outcome(0, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
    AgentDecision d;
    d.slots = {1, 0, 1, 0, 1};
    d.strategy = "level=0";

    SUBCASE("no_negotiation stores only the own row") {
        AblationFlags flags;
        flags.no_negotiation = true;
        auto agent = make_agent(0, PolicyKind::Heuristic, flags);
        agent->observe_round(o, ctx, d);
        const auto& rec = agent->stm().records().front();
        CHECK(rec.group == std::vector<int>{0});
        CHECK(rec.schedules.size() == 1);
        CHECK(rec.message_bodies.empty());
    }
    SUBCASE("no_stm keeps no rounds") {
        AblationFlags flags;
        flags.no_stm = true;
        auto agent = make_agent(0, PolicyKind::Heuristic, flags);
        agent->observe_round(o, ctx, d);
        CHECK(agent->stm().empty());
        CHECK(agent->knowledge().size() == 1);  // ltm still works
    }
    SUBCASE("no_ltm never writes the knowledge base") {
        AblationFlags flags;
        flags.no_ltm = true;
        auto agent = make_agent(0, PolicyKind::Heuristic, flags);
        agent->observe_round(o, ctx, d);
        CHECK(agent->knowledge().size() == 0);
        agent->seed_knowledge({});
        CHECK(agent->knowledge().size() == 0);
    }
    SUBCASE("no_reflection stores empty reflections") {
        AblationFlags flags;
        flags.no_reflection = true;
        auto agent = make_agent(0, PolicyKind::Heuristic, flags);
        agent->observe_round(o, ctx, d);
        REQUIRE(agent->knowledge().size() == 1);
        CHECK(agent->knowledge().entries()[0].reflection.empty());
    }
}

TEST_CASE("prompt carries the framing sections and respects the budget") {
    auto agent = make_agent(1, PolicyKind::Heuristic);
    auto ctx = make_ctx(3, 1, {0, 1});

    // give it some history
    for (int r = 0; r < 3; ++r) {
        auto o = make_outcome(r, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
        AgentDecision d;
        d.slots = {0, 1, 0, 1, 0};
        d.strategy = "level=0";
        agent->observe_round(o, make_ctx(r, 1, {0, 1}), d);
    }

    DecisionInputs inputs;
    inputs.situation = render_situation(1, ctx);
    inputs.evaluation = render_evaluation(1, ctx, agent->stm());
    inputs.tool_outcome = "outcome r3: own=01010 states=ISISI score=2.0 group=5.0 idle_slots=0";
    Exemplar ex;
    ex.situation = "s";
    ex.action_bits = "01010";
    ex.strategy = "level=0";
    ex.score = 2.0;
    ex.reflection = "clean; schedule 01010 held";
    inputs.exemplars = {ex};

    auto full = build_prompt(*agent, ctx, inputs, 6000);
    CHECK(full.system.find("DECISION") != std::string::npos);
    CHECK(full.user.find("[situation]") != std::string::npos);
    CHECK(full.user.find("[evaluation]") != std::string::npos);
    CHECK(full.user.find("[outcome]") != std::string::npos);
    CHECK(full.user.find("[lessons]") != std::string::npos);
    CHECK(full.user.find("[history]") != std::string::npos);
    CHECK(full.dropped_stm_lines == 0);
    CHECK(full.dropped_exemplars == 0);
    int full_total = static_cast<int>(full.system.size() + full.user.size());
    CHECK(full_total <= 6000);

    // tight budget: history lines go first; framing survives
    auto tight = build_prompt(*agent, ctx, inputs, full_total - 20);
    CHECK(static_cast<int>(tight.system.size() + tight.user.size()) <= full_total - 20);
    CHECK(tight.dropped_stm_lines > 0);
    CHECK(tight.user.find("[situation]") != std::string::npos);
    CHECK(tight.user.find("Commit your schedule") != std::string::npos);
}

TEST_CASE("no_stm prompt has no history section") {
    AblationFlags flags;
    flags.no_stm = true;
    auto agent = make_agent(1, PolicyKind::Heuristic, flags);
    auto ctx = make_ctx(2, 1, {0, 1});
    for (int r = 0; r < 2; ++r) {
        auto o = make_outcome(r, {0, 1}, {"10101", "01010"}, {"SISIS", "ISISI"});
        AgentDecision d;
        d.strategy = "level=0";
        agent->observe_round(o, make_ctx(r, 1, {0, 1}), d);
    }
    DecisionInputs inputs;
    inputs.situation = render_situation(1, ctx);
    inputs.evaluation = render_evaluation(1, ctx, agent->stm());
    auto prompt = build_prompt(*agent, ctx, inputs, 6000);
    CHECK(prompt.user.find("[history]") == std::string::npos);
}

TEST_CASE("seed_knowledge fills embeddings and obeys capacity") {
    auto agent = make_agent(0, PolicyKind::Heuristic);
    Exemplar ex;
    ex.situation = "ap=0 role=sharing rank=0";
    ex.action_bits = "10101";
    ex.strategy = "tdma-anchor";
    ex.score = 2.0;
    ex.reflection = "hold the anchor";
    agent->seed_knowledge({ex});
    REQUIRE(agent->knowledge().size() == 1);
    CHECK(agent->knowledge().entries()[0].embedding.size() ==
          static_cast<std::size_t>(kEmbeddingDim));
}

TEST_CASE("make_policy rejects an llm policy without a backend") {
    CHECK_THROWS(make_policy(PolicyKind::Llm));
    CHECK(make_policy(PolicyKind::Heuristic)->kind() == PolicyKind::Heuristic);
    CHECK(make_policy(PolicyKind::Genie)->kind() == PolicyKind::Genie);
    CHECK(make_policy(PolicyKind::Scripted)->kind() == PolicyKind::Scripted);
}

TEST_CASE("genie policy needs the oracle view") {
    auto agent = make_agent(0, PolicyKind::Genie);
    auto ctx = make_ctx(0, 0, {0, 1});
    CHECK_THROWS_AS(agent->decide_round(ctx), std::logic_error);
}

TEST_CASE("genie chooses full reuse when feasible and TDMA when not") {
    TopologyScenario scenario;
    scenario.bss_count = 2;
    scenario.tx_power_dbm = {20.0, 20.0};
    ChannelParams channel;

    LargeScaleRealization far;
    far.gain_db = {{-50.0, -120.0}, {-120.0, -50.0}};
    far.ap_gain_db = {{0.0, -100.0}, {-100.0, 0.0}};
    auto schedules = genie_group_schedules({0, 1}, 5, scenario, far, channel);
    CHECK(TransmissionSchedule{0, schedules[0]}.bits() == "11111");
    CHECK(TransmissionSchedule{1, schedules[1]}.bits() == "11111");

    LargeScaleRealization near;
    near.gain_db = {{-50.0, -52.0}, {-52.0, -50.0}};
    near.ap_gain_db = {{0.0, -55.0}, {-55.0, 0.0}};
    schedules = genie_group_schedules({0, 1}, 5, scenario, near, channel);
    CHECK(TransmissionSchedule{0, schedules[0]}.bits() == "10101");
    CHECK(TransmissionSchedule{1, schedules[1]}.bits() == "01010");
}

TEST_CASE("policy kind names round-trip") {
    for (auto kind :
         {PolicyKind::Llm, PolicyKind::Heuristic, PolicyKind::Genie, PolicyKind::Scripted})
        CHECK(policy_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS(policy_kind_from_string("nope"));
}
