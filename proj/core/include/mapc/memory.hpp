#pragma once

#include <deque>
#include <string>
#include <vector>

#include "mapc/gateway.hpp"
#include "mapc/protocol.hpp"

namespace mapc {

// One round as an agent remembers it. Under the no_negotiation ablation the
// record holds only the agent's own row (group view arrives via messages).
struct StmRecord {
    int round = 0;
    std::vector<int> group;                      // AP ids aligned with rows below
    std::vector<std::string> schedules;          // bitstrings
    std::vector<std::vector<SlotState>> states;  // [member][slot]
    std::vector<double> scores;                  // aligned with group
    double group_score = 0.0;
    std::vector<std::string> message_bodies;
};

// Sliding window, FIFO eviction. capacity 0 keeps nothing (no_stm ablation).
class ShortTermMemory {
public:
    explicit ShortTermMemory(int capacity = 5);

    void push(StmRecord record);
    const std::deque<StmRecord>& records() const { return records_; }
    int capacity() const { return capacity_; }
    bool empty() const { return records_.empty(); }
    void clear() { records_.clear(); }

private:
    int capacity_;
    std::deque<StmRecord> records_;
};

struct Exemplar {
    std::string situation;
    std::string action_bits;  // schedule bitstring
    std::string strategy;     // strategy tag
    double score = 0.0;
    std::string reflection;
    EmbeddingVector embedding;  // unit norm within 1e-6
    long insertion_order = 0;   // assigned by the knowledge base
};

// Performance-gated long-term store.
class KnowledgeBase {
public:
    explicit KnowledgeBase(std::size_t capacity = 10, double similarity_threshold = 0.85);

    struct UpdateDecision {
        enum class Branch {
            InsertedNoSimilar,        // no entry was similar; plain insert
            InsertedEvictingLowest,   // no similar entry, store full: evicted global min score
            ReplacedSimilarMin,       // outscored similar cluster, store full: replaced its argmin
            InsertedBesideSimilar,    // outscored similar cluster, room available
            Discarded                 // similar cluster exists and candidate did not outscore it
        };
        Branch branch = Branch::Discarded;
        int displaced_order = -1;  // insertion_order of evicted/replaced entry, -1 if none
        int similar_count = 0;
        double min_similar_score = 0.0;  // meaningful when similar_count > 0
    };

    // ltm_update: similarity cluster C = {entries with cosine >= threshold}.
    // C empty -> insert (evicting the global lowest score at capacity);
    // else insert only when candidate.score > min(C scores), replacing the
    // argmin of C at capacity; otherwise discard.
    // pre: embedding has dimension kEmbeddingDim and unit norm within 1e-6.
    UpdateDecision update(Exemplar candidate);

    // Direct preload for hand-written or restored exemplars. Skips the
    // similarity gate (it governs learned updates, not initial contents) but
    // still enforces capacity by evicting the global lowest score.
    void seed(Exemplar exemplar);

    // ltm_retrieve: top-k by (similarity desc, score desc, insertion order asc).
    std::vector<Exemplar> retrieve(const EmbeddingVector& query, int k = 3) const;

    const std::vector<Exemplar>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    double similarity_threshold() const { return similarity_threshold_; }

    // Versioned JSON document; embeddings as base-10 floats.
    std::string serialize() const;
    static KnowledgeBase deserialize(const std::string& text);

private:
    std::size_t capacity_;
    double similarity_threshold_;
    long next_order_ = 0;
    std::vector<Exemplar> entries_;
};

void stm_push(ShortTermMemory& stm, StmRecord record);  // free-function alias

}  // namespace mapc
