#include "mapc/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace mapc {

namespace {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 14695981039346656037ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

std::string utc_timestamp_now() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto t = system_clock::to_time_t(now);
    auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms.count()));
    return buf;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    if (a.empty()) throw std::invalid_argument("cosine: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector offline_embedding(const std::string& text) {
    EmbeddingVector v(kEmbeddingDim, 0.0);
    bool any = false;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        any = true;
        std::uint64_t h = fnv1a(token);
        // second, independently-keyed hash for the sign bit
        std::uint64_t s = fnv1a(token, 0xCBF29CE484222325ULL ^ 0x9E3779B97F4A7C15ULL);
        int bucket = static_cast<int>(h % kEmbeddingDim);
        v[bucket] += (s & 1) ? 1.0 : -1.0;
        token.clear();
    };
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c))
            token.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    if (!any) throw std::invalid_argument("offline_embedding: no tokens in input text");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw std::invalid_argument("offline_embedding: degenerate embedding");
    for (double& x : v) x /= norm;
    return v;
}

void MockChatBackend::push_response(std::string text) {
    queue_.push_back({false, GatewayErrorKind::Transport, std::move(text)});
}

void MockChatBackend::push_fault(GatewayErrorKind kind, std::string what) {
    queue_.push_back({true, kind, std::move(what)});
}

void MockChatBackend::set_default_generator(std::function<std::string(const ChatRequest&)> gen) {
    generator_ = std::move(gen);
}

std::string MockChatBackend::chat(const ChatRequest& request) {
    ++calls_;
    if (next_ < queue_.size()) {
        const Item& item = queue_[next_++];
        if (item.fault) throw GatewayError(item.kind, item.text);
        return item.text;
    }
    if (generator_) return generator_(request);
    throw GatewayError(GatewayErrorKind::Exhausted, "mock backend has no responses queued");
}

HttpGatewayConfig gateway_config_from_env() {
    HttpGatewayConfig cfg;
    if (const char* v = std::getenv("MAPC_LLM_BASE_URL")) cfg.base_url = v;
    if (const char* v = std::getenv("MAPC_LLM_API_KEY")) cfg.api_key = v;
    if (const char* v = std::getenv("MAPC_LLM_MODEL")) cfg.model = v;
    if (const char* v = std::getenv("MAPC_EMBED_MODEL")) cfg.embed_model = v;
    return cfg;
}

namespace {

struct SplitUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // "" or "/v1" etc., no trailing slash
};

SplitUrl split_base_url(const std::string& base) {
    auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos)
        throw GatewayError(GatewayErrorKind::Transport, "base url missing scheme: " + base);
    auto path_start = base.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = base;
    } else {
        out.origin = base.substr(0, path_start);
        out.path_prefix = base.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

// Accept bases with or without a trailing /v1.
std::string endpoint_path(const std::string& prefix, const std::string& leaf) {
    if (prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0)
        return prefix + leaf;
    return prefix + "/v1" + leaf;
}

nlohmann::json post_json(const HttpGatewayConfig& cfg, const std::string& leaf,
                         const nlohmann::json& payload) {
    SplitUrl url = split_base_url(cfg.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(static_cast<time_t>(cfg.timeout_s),
                                  static_cast<time_t>(std::fmod(cfg.timeout_s, 1.0) * 1e6));
    client.set_read_timeout(static_cast<time_t>(cfg.timeout_s), 0);
    client.set_write_timeout(static_cast<time_t>(cfg.timeout_s), 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    std::string path = endpoint_path(url.path_prefix, leaf);
    std::string body = payload.dump();

    double backoff = cfg.initial_backoff_s;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status != 200)
            throw GatewayError(GatewayErrorKind::BadStatus,
                               "status " + std::to_string(res->status) + ": " + res->body);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(GatewayErrorKind::MalformedResponse, e.what());
        }
    }
    throw GatewayError(GatewayErrorKind::Exhausted,
                       "retries exhausted for " + path + " (" + last_error + ")");
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpGatewayConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty())
        throw GatewayError(GatewayErrorKind::Transport, "HttpChatBackend requires a base url");
}

std::string HttpChatBackend::chat(const ChatRequest& request) {
    nlohmann::json payload;
    payload["model"] = request.model.empty() ? config_.model : request.model;
    payload["temperature"] = request.temperature;
    if (request.max_tokens) payload["max_tokens"] = *request.max_tokens;
    payload["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages)
        payload["messages"].push_back({{"role", m.role}, {"content", m.content}});

    auto response = post_json(config_, "/chat/completions", payload);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(GatewayErrorKind::MalformedResponse,
                           std::string("chat response shape: ") + e.what());
    }
}

EmbeddingVector HttpChatBackend::embed(const std::string& text) {
    nlohmann::json payload;
    payload["model"] = config_.embed_model;
    payload["input"] = text;
    auto response = post_json(config_, "/embeddings", payload);
    try {
        return response.at("data").at(0).at("embedding").get<EmbeddingVector>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(GatewayErrorKind::MalformedResponse,
                           std::string("embedding response shape: ") + e.what());
    }
}

EmbeddingVector EmbeddingProvider::embed(const std::string& text) const {
    if (remote_) return remote_->embed(text);
    return offline_embedding(text);
}

TranscribingBackend::TranscribingBackend(std::shared_ptr<ChatBackend> inner, TranscriptSink sink)
    : inner_(std::move(inner)), sink_(std::move(sink)) {}

void TranscribingBackend::set_context(std::string agent_id, int round) {
    agent_id_ = std::move(agent_id);
    round_ = round;
}

std::string TranscribingBackend::chat(const ChatRequest& request) {
    nlohmann::json serialized;
    serialized["model"] = request.model;
    serialized["temperature"] = request.temperature;
    for (const auto& m : request.messages)
        serialized["messages"].push_back({{"role", m.role}, {"content", m.content}});

    auto start = std::chrono::steady_clock::now();
    auto log = [&](const std::string& text) {
        if (!sink_) return;
        auto elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
        TranscriptEntry entry;
        entry.timestamp_utc = utc_timestamp_now();
        entry.agent_id = agent_id_;
        entry.round = round_;
        entry.request_hash = fnv1a_hex(serialized.dump());
        entry.response_text = text;
        entry.latency_ms = elapsed.count();
        sink_(entry);
    };
    try {
        std::string response = inner_->chat(request);
        log(response);
        return response;
    } catch (const GatewayError& e) {
        log(std::string("<gateway error: ") + e.what() + ">");
        throw;
    }
}

}  // namespace mapc
