#include "mapc/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "mapc/errors.hpp"

namespace mapc {

ShortTermMemory::ShortTermMemory(int capacity) : capacity_(capacity) {
    if (capacity < 0) throw std::invalid_argument("ShortTermMemory: capacity must be >= 0");
}

void ShortTermMemory::push(StmRecord record) {
    if (capacity_ == 0) return;
    records_.push_back(std::move(record));
    while (static_cast<int>(records_.size()) > capacity_) records_.pop_front();
}

void stm_push(ShortTermMemory& stm, StmRecord record) { stm.push(std::move(record)); }

KnowledgeBase::KnowledgeBase(std::size_t capacity, double similarity_threshold)
    : capacity_(capacity), similarity_threshold_(similarity_threshold) {
    if (capacity == 0) throw std::invalid_argument("KnowledgeBase: capacity must be positive");
    if (!(similarity_threshold >= -1.0 && similarity_threshold <= 1.0))
        throw std::invalid_argument("KnowledgeBase: similarity threshold outside [-1, 1]");
}

namespace {

void check_embedding(const EmbeddingVector& e) {
    if (static_cast<int>(e.size()) != kEmbeddingDim)
        throw std::invalid_argument("exemplar embedding has wrong dimension");
    double norm = 0.0;
    for (double x : e) norm += x * x;
    norm = std::sqrt(norm);
    if (std::abs(norm - 1.0) > 1e-6)
        throw std::invalid_argument("exemplar embedding is not unit norm");
}

}  // namespace

KnowledgeBase::UpdateDecision KnowledgeBase::update(Exemplar candidate) {
    check_embedding(candidate.embedding);
    UpdateDecision decision;

    // similarity cluster
    std::vector<std::size_t> similar;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (cosine(entries_[i].embedding, candidate.embedding) >= similarity_threshold_)
            similar.push_back(i);
    decision.similar_count = static_cast<int>(similar.size());

    candidate.insertion_order = next_order_;

    if (similar.empty()) {
        if (entries_.size() >= capacity_) {
            auto lowest = std::min_element(
                entries_.begin(), entries_.end(), [](const Exemplar& a, const Exemplar& b) {
                    if (a.score != b.score) return a.score < b.score;
                    return a.insertion_order < b.insertion_order;  // oldest loses ties
                });
            decision.displaced_order = static_cast<int>(lowest->insertion_order);
            entries_.erase(lowest);
            decision.branch = UpdateDecision::Branch::InsertedEvictingLowest;
        } else {
            decision.branch = UpdateDecision::Branch::InsertedNoSimilar;
        }
        entries_.push_back(std::move(candidate));
        ++next_order_;
        return decision;
    }

    auto argmin = similar.front();
    for (std::size_t idx : similar) {
        if (entries_[idx].score < entries_[argmin].score ||
            (entries_[idx].score == entries_[argmin].score &&
             entries_[idx].insertion_order < entries_[argmin].insertion_order))
            argmin = idx;
    }
    decision.min_similar_score = entries_[argmin].score;

    if (!(candidate.score > entries_[argmin].score)) {
        decision.branch = UpdateDecision::Branch::Discarded;
        return decision;
    }
    if (entries_.size() >= capacity_) {
        decision.displaced_order = static_cast<int>(entries_[argmin].insertion_order);
        entries_.erase(entries_.begin() + static_cast<long>(argmin));
        decision.branch = UpdateDecision::Branch::ReplacedSimilarMin;
    } else {
        decision.branch = UpdateDecision::Branch::InsertedBesideSimilar;
    }
    entries_.push_back(std::move(candidate));
    ++next_order_;
    return decision;
}

void KnowledgeBase::seed(Exemplar exemplar) {
    check_embedding(exemplar.embedding);
    if (entries_.size() >= capacity_) {
        auto lowest = std::min_element(
            entries_.begin(), entries_.end(), [](const Exemplar& a, const Exemplar& b) {
                if (a.score != b.score) return a.score < b.score;
                return a.insertion_order < b.insertion_order;
            });
        entries_.erase(lowest);
    }
    exemplar.insertion_order = next_order_++;
    entries_.push_back(std::move(exemplar));
}

std::vector<Exemplar> KnowledgeBase::retrieve(const EmbeddingVector& query, int k) const {
    if (k <= 0 || entries_.empty()) return {};
    struct Scored {
        double sim;
        const Exemplar* e;
    };
    std::vector<Scored> scored;
    scored.reserve(entries_.size());
    for (const auto& e : entries_) scored.push_back({cosine(e.embedding, query), &e});
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.e->score != b.e->score) return a.e->score > b.e->score;
        return a.e->insertion_order < b.e->insertion_order;
    });
    std::vector<Exemplar> out;
    for (const auto& s : scored) {
        out.push_back(*s.e);
        if (static_cast<int>(out.size()) == k) break;
    }
    return out;
}

namespace {
constexpr int kKbVersion = 1;
}

std::string KnowledgeBase::serialize() const {
    nlohmann::ordered_json j;
    j["mapc_kb_version"] = kKbVersion;
    j["capacity"] = capacity_;
    j["similarity_threshold"] = similarity_threshold_;
    j["next_order"] = next_order_;
    j["exemplars"] = nlohmann::ordered_json::array();
    for (const auto& e : entries_) {
        j["exemplars"].push_back({{"situation", e.situation},
                                  {"action_bits", e.action_bits},
                                  {"strategy", e.strategy},
                                  {"score", e.score},
                                  {"reflection", e.reflection},
                                  {"insertion_order", e.insertion_order},
                                  {"embedding", e.embedding}});
    }
    return j.dump();
}

KnowledgeBase KnowledgeBase::deserialize(const std::string& text) {
    try {
        auto j = nlohmann::ordered_json::parse(text);
        int version = j.at("mapc_kb_version").get<int>();
        if (version != kKbVersion)
            throw InfeasibleConfiguration("knowledge base version " + std::to_string(version) +
                                          " not supported");
        KnowledgeBase kb(j.at("capacity").get<std::size_t>(),
                         j.at("similarity_threshold").get<double>());
        for (const auto& ej : j.at("exemplars")) {
            Exemplar e;
            e.situation = ej.at("situation").get<std::string>();
            e.action_bits = ej.at("action_bits").get<std::string>();
            e.strategy = ej.at("strategy").get<std::string>();
            e.score = ej.at("score").get<double>();
            e.reflection = ej.at("reflection").get<std::string>();
            e.insertion_order = ej.at("insertion_order").get<long>();
            e.embedding = ej.at("embedding").get<EmbeddingVector>();
            check_embedding(e.embedding);
            kb.entries_.push_back(std::move(e));
        }
        kb.next_order_ = j.at("next_order").get<long>();
        return kb;
    } catch (const nlohmann::json::exception& e) {
        throw InfeasibleConfiguration(std::string("knowledge base document malformed: ") +
                                      e.what());
    }
}

}  // namespace mapc
