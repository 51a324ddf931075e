#pragma once

// Token embedding providers. The encoder is frozen: it maps text to one
// vector per token and is never trained.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arq {

/// Row-major token-by-dimension matrix with finite entries.
class TokenMatrix {
public:
    TokenMatrix() = default;
    TokenMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    bool operator==(const TokenMatrix&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline constexpr std::string_view kEmptyToken = "<empty>";

/// Lowercase, split on whitespace, strip leading and trailing punctuation.
/// Text without any token yields {"<empty>"}.
std::vector<std::string> tokenize(std::string_view text);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual TokenMatrix embed(std::string_view text) = 0;
    /// Order-preserving; the default calls embed() per text.
    virtual std::vector<TokenMatrix> embed_batch(const std::vector<std::string>& texts);
};

/// Each token maps to a fixed pseudo-random vector in [-1, 1)^d:
///   state_0 = fnv1a64(token)
///   state_k = state_{k-1} * 6364136223846793005 + 1442695040888963407 (mod 2^64)
///   entry_k = 2 * (state_k >> 11) / 2^53 - 1
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 64);
    std::size_t dim() const override { return dim_; }
    TokenMatrix embed(std::string_view text) override;

    void token_vector(std::string_view token, std::span<double> out) const;

private:
    std::size_t dim_;
};

struct RemoteEmbedConfig {
    std::string endpoint;      ///< e.g. http://127.0.0.1:8000/embed
    std::size_t expected_dim = 0;  ///< 0 accepts the service-declared dimension
    std::size_t batch_size = 32;
    int max_in_flight = 2;
    int timeout_seconds = 120;
};

/// Client for the embedding service:
///   POST {"texts": [..]} -> {"dim": d, "matrices": [[[..], ..], ..]}
/// Row counts follow the service's own tokenization.
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedConfig cfg);
    std::size_t dim() const override;
    TokenMatrix embed(std::string_view text) override;
    std::vector<TokenMatrix> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::vector<TokenMatrix> post(const std::vector<std::string>& texts);

    RemoteEmbedConfig cfg_;
    mutable std::mutex mu_;
    std::size_t dim_ = 0;
    std::counting_semaphore<64> in_flight_;
};

/// Parses one service response, enforcing shape, count and finiteness.
std::vector<TokenMatrix> parse_embed_response(std::string_view body, std::size_t expected_count,
                                              std::size_t expected_dim);

}  // namespace arq
