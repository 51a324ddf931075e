#include "arq/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "arq/error.hpp"
#include "arq/hash.hpp"

namespace arq {

using json = nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t b = i, e = j;
        while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) {
            std::string tok(text.substr(b, e - b));
            for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(std::move(tok));
        }
        i = j;
    }
    if (out.empty()) out.emplace_back(kEmptyToken);
    return out;
}

std::vector<TokenMatrix> Embedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<TokenMatrix> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

void HashEmbedder::token_vector(std::string_view token, std::span<double> out) const {
    std::uint64_t state = fnv1a64(token);
    for (auto& v : out) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
        v = 2.0 * u - 1.0;
    }
}

TokenMatrix HashEmbedder::embed(std::string_view text) {
    auto tokens = tokenize(text);
    TokenMatrix m(tokens.size(), dim_);
    for (std::size_t r = 0; r < tokens.size(); ++r) token_vector(tokens[r], m.row(r));
    return m;
}

std::vector<TokenMatrix> parse_embed_response(std::string_view body, std::size_t expected_count,
                                              std::size_t expected_dim) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw EmbedError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("matrices"))
        throw EmbedError("embedding response lacks 'dim' or 'matrices'");
    if (!doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0)
        throw EmbedError("embedding response has an invalid 'dim'");
    const auto dim = doc["dim"].get<std::size_t>();
    if (expected_dim != 0 && dim != expected_dim)
        throw ContractError("embedding service declares dim " + std::to_string(dim) + ", expected " +
                            std::to_string(expected_dim));
    const auto& mats = doc["matrices"];
    if (!mats.is_array() || mats.size() != expected_count)
        throw EmbedError("embedding response holds " + std::to_string(mats.is_array() ? mats.size() : 0) +
                         " matrices for " + std::to_string(expected_count) + " texts");
    std::vector<TokenMatrix> out;
    for (const auto& m : mats) {
        if (!m.is_array() || m.empty()) throw EmbedError("embedding matrix without rows");
        TokenMatrix tm(m.size(), dim);
        for (std::size_t r = 0; r < m.size(); ++r) {
            const auto& row = m[r];
            if (!row.is_array() || row.size() != dim)
                throw ContractError("embedding row of width " + std::to_string(row.is_array() ? row.size() : 0) +
                                    ", expected " + std::to_string(dim));
            for (std::size_t c = 0; c < dim; ++c) {
                if (!row[c].is_number()) throw EmbedError("non-numeric embedding entry");
                const double v = row[c].get<double>();
                if (!std::isfinite(v)) throw EmbedError("non-finite embedding entry");
                tm(r, c) = v;
            }
        }
        out.push_back(std::move(tm));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedConfig cfg)
    : cfg_(std::move(cfg)), dim_(cfg_.expected_dim), in_flight_(std::clamp(cfg_.max_in_flight, 1, 64)) {
    if (cfg_.endpoint.find("://") == std::string::npos) throw ConfigError("embed endpoint needs a scheme");
    if (cfg_.batch_size == 0) throw ConfigError("embed batch size must be positive");
}

std::size_t RemoteEmbedder::dim() const {
    std::lock_guard lock(mu_);
    return dim_;
}

std::vector<TokenMatrix> RemoteEmbedder::post(const std::vector<std::string>& texts) {
    const auto scheme_end = cfg_.endpoint.find("://");
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    const std::string base = cfg_.endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);

    httplib::Client cli(base);
    cli.set_connection_timeout(cfg_.timeout_seconds, 0);
    cli.set_read_timeout(cfg_.timeout_seconds, 0);
    in_flight_.acquire();
    auto res = cli.Post(path, json{{"texts", texts}}.dump(), "application/json");
    in_flight_.release();
    if (!res) throw EmbedError("embedding transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw EmbedError("embedding service returned HTTP " + std::to_string(res->status) + ": " + res->body);

    std::size_t want;
    {
        std::lock_guard lock(mu_);
        want = dim_;
    }
    auto out = parse_embed_response(res->body, texts.size(), want);
    if (want == 0 && !out.empty()) {
        std::lock_guard lock(mu_);
        dim_ = out.front().cols();
    }
    return out;
}

TokenMatrix RemoteEmbedder::embed(std::string_view text) { return post({std::string(text)}).front(); }

std::vector<TokenMatrix> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<TokenMatrix> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += cfg_.batch_size) {
        const auto end = std::min(texts.size(), start + cfg_.batch_size);
        auto part = post({texts.begin() + static_cast<std::ptrdiff_t>(start),
                          texts.begin() + static_cast<std::ptrdiff_t>(end)});
        for (auto& m : part) out.push_back(std::move(m));
    }
    return out;
}

}  // namespace arq
