#include "arq/llm_client.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "arq/error.hpp"
#include "jsonl.hpp"

namespace arq::llm {

using detail::json;

std::string_view name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> parse_role(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    return std::nullopt;
}

void ChatRequest::validate() const {
    if (messages.empty()) throw ContractError("chat request without messages");
    if (messages.back().role != Role::User) throw ContractError("last chat message must come from the user");
    for (const auto& m : messages)
        if (m.role == Role::User && m.content.empty()) throw ContractError("empty user message");
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ContractError("temperature must be >= 0");
    if (max_tokens <= 0) throw ContractError("max_tokens must be positive");
}

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back({{"role", name(m.role)}, {"content", m.content}});
    return arr;
}

json request_json(const ChatRequest& req, int seed_run) {
    return {{"model_id", req.model_id},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
            {"messages", messages_json(req.messages)},
            {"seed_run", seed_run}};
}

}  // namespace

std::string canonical_request(const ChatRequest& req, int seed_run) { return request_json(req, seed_run).dump(); }

CacheKey CacheKey::of(const ChatRequest& req, int seed_run) {
    return {hex64(fnv1a64(canonical_request(req, seed_run)))};
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const { return dir_ / (key.digest + ".json"); }

std::optional<std::string> ResponseCache::get(const CacheKey& key, const ChatRequest& req, int seed_run) const {
    std::lock_guard lock(mu_);
    std::ifstream in(entry_path(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        auto entry = json::parse(ss.str());
        if (entry.at("request") != request_json(req, seed_run)) return std::nullopt;
        return entry.at("reply").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;  // torn or foreign file; treat as a miss
    }
}

void ResponseCache::put(const CacheKey& key, const ChatRequest& req, int seed_run, const std::string& reply) {
    json entry{{"request", request_json(req, seed_run)},
               {"reply", reply},
               {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}};
    std::lock_guard lock(mu_);
    detail::write_file_atomic(entry_path(key), entry.dump(2) + "\n");
}

void ScriptedProvider::script(std::string first_user_message, std::vector<std::string> replies) {
    std::lock_guard lock(mu_);
    scripts_[std::move(first_user_message)] = {std::move(replies), 0};
}

ChatMessage ScriptedProvider::send(const ChatRequest& req, int) {
    std::lock_guard lock(mu_);
    ++calls_;
    std::string first;
    for (const auto& m : req.messages)
        if (m.role == Role::User) {
            first = m.content;
            break;
        }
    if (auto it = scripts_.find(first); it != scripts_.end()) {
        auto& [replies, pos] = it->second;
        if (pos < replies.size()) return {Role::Assistant, replies[pos++]};
    }
    if (default_pos_ < default_script_.size()) return {Role::Assistant, default_script_[default_pos_++]};
    throw ProviderError("scripted provider exhausted", first);
}

namespace {

std::atomic<std::uint64_t> g_http_requests{0};

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpChatProvider::HttpChatProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) throw ConfigError("remote chat provider needs an endpoint URL");
    split_endpoint(cfg_.endpoint);
}

std::uint64_t HttpChatProvider::requests_sent() { return g_http_requests.load(); }

ChatMessage HttpChatProvider::send(const ChatRequest& req, int seed_run) {
    auto [base, path] = split_endpoint(cfg_.endpoint);
    httplib::Client cli(base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    json body{{"model", req.model_id},
              {"messages", messages_json(req.messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens},
              {"seed", seed_run}};
    ++g_http_requests;
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransientError("chat transport failure: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransientError("chat provider returned HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw ProviderError("chat provider returned HTTP " + std::to_string(res->status), res->body);
    try {
        auto reply = json::parse(res->body);
        const auto& msg = reply.at("choices").at(0).at("message");
        return {Role::Assistant, msg.at("content").get<std::string>()};
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected chat response shape: ") + e.what(), res->body);
    }
}

ChatClient::ChatClient(std::shared_ptr<ChatProvider> provider, std::optional<std::filesystem::path> cache_dir,
                       RetryPolicy retry, int max_in_flight)
    : provider_(std::move(provider)), retry_(std::move(retry)), in_flight_(std::max(1, max_in_flight)) {
    if (!provider_) throw ConfigError("chat client without a provider");
    if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("max_in_flight must be in [1, 1024]");
    if (cache_dir) cache_ = std::make_unique<ResponseCache>(*cache_dir);
    if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ClientStats ChatClient::stats() const { return {provider_calls_.load(), cache_hits_.load(), retries_.load()}; }

ChatMessage ChatClient::complete(const ChatRequest& req, int seed_run) {
    req.validate();
    const auto key = CacheKey::of(req, seed_run);

    // Serialize work per key so concurrent identical requests hit the
    // provider once.
    std::shared_ptr<std::mutex> key_lock;
    {
        std::lock_guard lock(key_mu_);
        auto& slot = key_locks_[key.digest];
        if (!slot) slot = std::make_shared<std::mutex>();
        key_lock = slot;
    }
    std::lock_guard per_key(*key_lock);

    if (cache_) {
        if (auto hit = cache_->get(key, req, seed_run)) {
            ++cache_hits_;
            return {Role::Assistant, *hit};
        }
    }

    auto backoff = retry_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            in_flight_.acquire();
            ++provider_calls_;
            ChatMessage reply;
            try {
                reply = provider_->send(req, seed_run);
            } catch (...) {
                in_flight_.release();
                throw;
            }
            in_flight_.release();
            if (cache_) cache_->put(key, req, seed_run, reply.content);
            return reply;
        } catch (const TransientError& e) {
            if (attempt >= retry_.max_retries)
                throw TransportError(std::string("retries exhausted: ") + e.what());
            ++retries_;
            retry_.sleep(backoff);
            backoff = std::chrono::milliseconds(static_cast<long long>(backoff.count() * retry_.multiplier));
        }
    }
}

std::string api_key_from_env() {
    for (const char* var : {"ARQ_API_KEY", "OPENAI_API_KEY"})
        if (const char* v = std::getenv(var); v && *v) return v;
    return {};
}

}  // namespace arq::llm
