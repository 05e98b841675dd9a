#include <cmath>
#include <vector>

#include "doctest.h"
#include "mapc/memory.hpp"
#include "mapc/rng.hpp"

using namespace mapc;

namespace {

EmbeddingVector axis(int i) {
    EmbeddingVector v(kEmbeddingDim, 0.0);
    v[i % kEmbeddingDim] = 1.0;
    return v;
}

// unit vector at angle acos(c) from axis(a), rotated toward axis(b)
EmbeddingVector blend(int a, int b, double c) {
    EmbeddingVector v(kEmbeddingDim, 0.0);
    v[a % kEmbeddingDim] = c;
    v[b % kEmbeddingDim] = std::sqrt(1.0 - c * c);
    return v;
}

Exemplar make(const EmbeddingVector& e, double score, const std::string& tag = "t") {
    Exemplar x;
    x.situation = tag;
    x.action_bits = "10101";
    x.strategy = tag;
    x.score = score;
    x.reflection = "r";
    x.embedding = e;
    return x;
}

}  // namespace

TEST_CASE("stm keeps a sliding window") {
    ShortTermMemory stm(3);
    for (int r = 0; r < 5; ++r) {
        StmRecord rec;
        rec.round = r;
        stm.push(rec);
    }
    REQUIRE(stm.records().size() == 3);
    CHECK(stm.records().front().round == 2);
    CHECK(stm.records().back().round == 4);

    ShortTermMemory none(0);
    none.push(StmRecord{});
    CHECK(none.empty());

    CHECK_THROWS(ShortTermMemory(-1));
}

TEST_CASE("empty kb accepts any candidate") {
    KnowledgeBase kb(10, 0.85);
    auto d = kb.update(make(axis(0), -3.0));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::InsertedNoSimilar);
    CHECK(kb.size() == 1);
}

TEST_CASE("similar cluster gates on strict score improvement") {
    KnowledgeBase kb(10, 0.85);
    kb.update(make(axis(0), 2.0));

    // same direction, equal score: "superior performance" is strict
    auto d = kb.update(make(axis(0), 2.0));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::Discarded);
    CHECK(d.similar_count == 1);
    CHECK(d.min_similar_score == 2.0);
    CHECK(kb.size() == 1);

    d = kb.update(make(axis(0), 2.5));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::InsertedBesideSimilar);
    CHECK(kb.size() == 2);
}

TEST_CASE("dissimilar insert evicts the global minimum only at capacity") {
    KnowledgeBase kb(3, 0.85);
    kb.update(make(axis(0), 5.0));
    kb.update(make(axis(1), 1.0));
    kb.update(make(axis(2), 3.0));
    REQUIRE(kb.size() == 3);

    auto d = kb.update(make(axis(3), 0.5));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::InsertedEvictingLowest);
    CHECK(kb.size() == 3);
    // the score-1.0 entry (global min) left, even though the candidate scored lower
    bool has_low = false;
    for (const auto& e : kb.entries()) has_low |= e.score == 1.0;
    CHECK_FALSE(has_low);
}

TEST_CASE("similar replacement at capacity removes the cluster argmin") {
    KnowledgeBase kb(3, 0.85);
    kb.update(make(axis(0), 2.0, "a"));
    kb.update(make(blend(0, 1, 0.95), 4.0, "b"));  // similar to a
    kb.update(make(axis(2), 0.1, "c"));            // global min, dissimilar
    REQUIRE(kb.size() == 3);

    auto d = kb.update(make(axis(0), 3.0, "d"));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::ReplacedSimilarMin);
    CHECK(kb.size() == 3);
    // "a" (cluster min 2.0) was replaced; "c" (global min 0.1) survived
    bool has_a = false, has_c = false;
    for (const auto& e : kb.entries()) {
        has_a |= e.strategy == "a";
        has_c |= e.strategy == "c";
    }
    CHECK_FALSE(has_a);
    CHECK(has_c);
}

TEST_CASE("capacity never exceeded under random updates") {
    KnowledgeBase kb(5, 0.85);
    RngStream rng(21, {1});
    for (int i = 0; i < 500; ++i) {
        int dir = static_cast<int>(rng.uniform_below(8));
        double c = 0.7 + 0.3 * rng.uniform01();
        double score = rng.uniform(-5.0, 5.0);
        kb.update(make(blend(dir, dir + 1, c), score));
        CHECK(kb.size() <= 5);
    }
}

TEST_CASE("cluster minimum never decreases through replacements") {
    KnowledgeBase kb(4, 0.9);
    RngStream rng(33, {2});
    for (int i = 0; i < 300; ++i) {
        Exemplar cand = make(blend(0, 1, 0.8 + 0.2 * rng.uniform01()), rng.uniform(-3.0, 3.0));
        double min_before = 1e18;
        for (const auto& e : kb.entries())
            if (cosine(e.embedding, cand.embedding) >= kb.similarity_threshold())
                min_before = std::min(min_before, e.score);
        auto d = kb.update(cand);
        if (d.branch == KnowledgeBase::UpdateDecision::Branch::ReplacedSimilarMin ||
            d.branch == KnowledgeBase::UpdateDecision::Branch::InsertedBesideSimilar)
            CHECK(cand.score > min_before);
    }
}

TEST_CASE("retrieve ranks by similarity, then score, then age") {
    KnowledgeBase kb(10, 0.99);
    kb.update(make(axis(0), 1.0, "old"));
    kb.update(make(blend(0, 1, 0.9), 9.0, "off"));
    kb.update(make(axis(2), 5.0, "far"));

    auto got = kb.retrieve(axis(0), 2);
    REQUIRE(got.size() == 2);
    CHECK(got[0].strategy == "old");  // exact match despite lower score
    CHECK(got[1].strategy == "off");

    // equal similarity: higher score first
    KnowledgeBase kb2(10, 0.99);
    kb2.update(make(axis(0), 1.0, "low"));
    kb2.update(make(axis(0), 3.0, "high"));  // discarded? no: score 3 > 1 -> inserted
    REQUIRE(kb2.size() == 2);
    got = kb2.retrieve(axis(0), 2);
    CHECK(got[0].strategy == "high");
    CHECK(got[1].strategy == "low");

    CHECK(kb.retrieve(axis(0), 0).empty());
}

TEST_CASE("embedding preconditions are enforced") {
    KnowledgeBase kb(4, 0.85);
    Exemplar bad = make(axis(0), 1.0);
    bad.embedding[0] = 2.0;  // not unit norm
    CHECK_THROWS(kb.update(bad));
    bad.embedding = EmbeddingVector(10, 0.1);  // wrong dimension
    CHECK_THROWS(kb.update(bad));
}

TEST_CASE("serialize round-trips entries, order, and parameters") {
    KnowledgeBase kb(7, 0.8);
    kb.update(make(axis(0), 1.5, "one"));
    kb.update(make(axis(1), -0.5, "two"));
    auto text = kb.serialize();
    auto back = KnowledgeBase::deserialize(text);
    CHECK(back.capacity() == 7);
    CHECK(back.similarity_threshold() == 0.8);
    REQUIRE(back.size() == 2);
    CHECK(back.entries()[0].strategy == "one");
    CHECK(back.entries()[1].strategy == "two");
    CHECK(back.entries()[0].score == 1.5);
    CHECK(back.entries()[0].insertion_order == kb.entries()[0].insertion_order);
    CHECK(back.serialize() == text);

    CHECK_THROWS(KnowledgeBase::deserialize("{}"));
    CHECK_THROWS(KnowledgeBase::deserialize("not json"));
}

TEST_CASE("seed preloads near-duplicates the gate would reject") {
    KnowledgeBase kb(3, 0.85);
    kb.seed(make(axis(0), 2.0, "anchor"));
    kb.seed(make(blend(0, 1, 0.95), 1.5, "twin"));
    REQUIRE(kb.size() == 2);
    CHECK(kb.entries()[1].strategy == "twin");

    auto d = kb.update(make(blend(0, 1, 0.96), 1.0, "gated"));
    CHECK(d.branch == KnowledgeBase::UpdateDecision::Branch::Discarded);

    SUBCASE("capacity still enforced, global min evicted") {
        kb.seed(make(axis(2), 0.5, "weak"));
        kb.seed(make(axis(3), 9.0, "strong"));
        REQUIRE(kb.size() == 3);
        for (const auto& e : kb.entries()) CHECK(e.strategy != "weak");
    }

    SUBCASE("seeded entries keep distinct insertion orders") {
        CHECK(kb.entries()[0].insertion_order < kb.entries()[1].insertion_order);
        CHECK_THROWS(kb.seed(make(EmbeddingVector(kEmbeddingDim, 0.5), 1.0)));
    }
}
