#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mapc {

inline constexpr int kEmbeddingDim = 256;

using EmbeddingVector = std::vector<double>;

// Cosine similarity; inputs need not be normalized. Result clamped to [-1, 1].
// pre: same dimension, both non-zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Deterministic hash-based embedder: lowercase, split on non-alphanumerics,
// FNV-1a each token into one of 256 buckets with a sign bit from a second
// hash, accumulate, L2-normalize. No network, stable across platforms.
// pre: text non-empty after tokenization; throws std::invalid_argument.
EmbeddingVector offline_embedding(const std::string& text);

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.2;
    std::optional<int> max_tokens;
};

enum class GatewayErrorKind { Transport, Timeout, BadStatus, MalformedResponse, Exhausted };

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    GatewayErrorKind kind() const { return kind_; }

private:
    GatewayErrorKind kind_;
};

// Entry appended to the transcript log for every chat exchange.
struct TranscriptEntry {
    std::string timestamp_utc;
    std::string agent_id;
    int round = 0;
    std::string request_hash;  // FNV-1a hex of the serialized request
    std::string response_text;
    double latency_ms = 0.0;
};

using TranscriptSink = std::function<void(const TranscriptEntry&)>;

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns assistant text; throws GatewayError. Never mutates agent state.
    virtual std::string chat(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Deterministic scripted backend for tests and offline end-to-end runs.
// Responses are served in FIFO order; optional fault injections interleave.
class MockChatBackend : public ChatBackend {
public:
    void push_response(std::string text);
    void push_fault(GatewayErrorKind kind, std::string what);
    // When the queue is empty, reply via this generator (default: throws).
    void set_default_generator(std::function<std::string(const ChatRequest&)> gen);

    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }
    int calls() const { return calls_; }

private:
    struct Item {
        bool fault = false;
        GatewayErrorKind kind = GatewayErrorKind::Transport;
        std::string text;
    };
    std::vector<Item> queue_;
    std::size_t next_ = 0;
    int calls_ = 0;
    std::function<std::string(const ChatRequest&)> generator_;
};

struct HttpGatewayConfig {
    std::string base_url;              // e.g. http://localhost:8000/v1
    std::string api_key;               // optional bearer token
    std::string model;                 // chat model id
    std::string embed_model;           // embeddings model id
    double timeout_s = 60.0;
    int max_retries = 3;               // exponential backoff between attempts
    double initial_backoff_s = 0.5;
};

// Read MAPC_LLM_BASE_URL, MAPC_LLM_API_KEY, MAPC_LLM_MODEL, MAPC_EMBED_MODEL.
HttpGatewayConfig gateway_config_from_env();

// OpenAI-compatible wire protocol over /v1/chat/completions.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpGatewayConfig config);
    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return "http"; }

    // POST /v1/embeddings
    EmbeddingVector embed(const std::string& text);

private:
    HttpGatewayConfig config_;
};

// Embedding entry point used by the agent pipeline: offline embedder by
// default; remote when a backend is supplied.
class EmbeddingProvider {
public:
    EmbeddingProvider() = default;  // offline
    explicit EmbeddingProvider(std::shared_ptr<HttpChatBackend> remote) : remote_(std::move(remote)) {}
    EmbeddingVector embed(const std::string& text) const;

private:
    std::shared_ptr<HttpChatBackend> remote_;
};

std::string fnv1a_hex(const std::string& bytes);
std::string utc_timestamp_now();

// Wraps a backend with transcript logging; forwards all calls.
class TranscribingBackend : public ChatBackend {
public:
    TranscribingBackend(std::shared_ptr<ChatBackend> inner, TranscriptSink sink);
    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return inner_->name(); }
    void set_context(std::string agent_id, int round);

private:
    std::shared_ptr<ChatBackend> inner_;
    TranscriptSink sink_;
    std::string agent_id_ = "?";
    int round_ = 0;
};

}  // namespace mapc
