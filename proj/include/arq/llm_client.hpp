#pragma once

// Chat-completion client: a provider behind a content-addressed disk cache
// and a retry policy for transient transport failures.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "arq/hash.hpp"

namespace arq::llm {

enum class Role { System, User, Assistant };
std::string_view name(Role r);
std::optional<Role> parse_role(std::string_view s);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model_id = "gpt-3.5-turbo";
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    int max_tokens = 256;

    /// Non-empty messages, last one from the user, sane sampling values.
    void validate() const;
    bool operator==(const ChatRequest&) const = default;
};

/// Canonical bytes of (request, seed_run); the cache key hashes these.
std::string canonical_request(const ChatRequest& req, int seed_run);

struct CacheKey {
    std::string digest;  ///< 16 hex chars

    static CacheKey of(const ChatRequest& req, int seed_run);
    bool operator==(const CacheKey&) const = default;
};

/// One JSON file per entry: {request, reply, timestamp}. Entries are written
/// through a temp file and renamed; a hit also checks the stored request so a
/// digest collision reads as a miss.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const CacheKey& key, const ChatRequest& req, int seed_run) const;
    void put(const CacheKey& key, const ChatRequest& req, int seed_run, const std::string& reply);
    std::filesystem::path entry_path(const CacheKey& key) const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
};

/// A backend that answers one request. Throws TransientError for retryable
/// failures and ProviderError for everything else.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatMessage send(const ChatRequest& req, int seed_run) = 0;
    /// True when `send` reaches over the network.
    virtual bool is_remote() const { return false; }
};

/// Replies from a fixed script. Conversations are identified by their first
/// user message; each conversation consumes its own script in order, falling
/// back to the shared default script.
class ScriptedProvider : public ChatProvider {
public:
    ScriptedProvider() = default;
    explicit ScriptedProvider(std::vector<std::string> default_script) : default_script_(std::move(default_script)) {}

    void script(std::string first_user_message, std::vector<std::string> replies);
    ChatMessage send(const ChatRequest& req, int seed_run) override;
    std::size_t calls() const { return calls_; }

private:
    std::mutex mu_;
    std::vector<std::string> default_script_;
    std::size_t default_pos_ = 0;
    std::map<std::string, std::pair<std::vector<std::string>, std::size_t>> scripts_;
    std::size_t calls_ = 0;
};

struct HttpProviderConfig {
    std::string endpoint;  ///< e.g. https://api.openai.com/v1/chat/completions
    std::string api_key;
    std::chrono::milliseconds timeout{60000};
};

/// Minimal chat-completions wire shape:
///   -> {"model", "messages":[{"role","content"}], "temperature", "max_tokens", "seed"}
///   <- {"choices":[{"message":{"role","content"}}]}
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig cfg);
    ChatMessage send(const ChatRequest& req, int seed_run) override;
    bool is_remote() const override { return true; }

    /// Process-wide count of HTTP requests issued by any instance.
    static std::uint64_t requests_sent();

private:
    HttpProviderConfig cfg_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    /// Injected so tests can run without sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct ClientStats {
    std::uint64_t provider_calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t retries = 0;
};

class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatProvider> provider, std::optional<std::filesystem::path> cache_dir = std::nullopt,
               RetryPolicy retry = {}, int max_in_flight = 4);

    /// Assistant reply for `req`; served from the cache when possible.
    ChatMessage complete(const ChatRequest& req, int seed_run = 0);

    ClientStats stats() const;

private:
    std::shared_ptr<ChatProvider> provider_;
    std::unique_ptr<ResponseCache> cache_;
    RetryPolicy retry_;
    std::counting_semaphore<1024> in_flight_;
    std::mutex key_mu_;
    std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
    std::atomic<std::uint64_t> provider_calls_{0}, cache_hits_{0}, retries_{0};
};

/// Reads the API credential from ARQ_API_KEY (then OPENAI_API_KEY).
std::string api_key_from_env();

}  // namespace arq::llm
