#pragma once

#include <stdexcept>
#include <string>

namespace arq {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class GenerationError : public Error { using Error::Error; };
class EmbedError : public Error { using Error::Error; };

/// Network-level failure that exhausted the retry budget.
class TransportError : public Error { using Error::Error; };

/// Retryable failure raised by a provider (connection reset, 429, 5xx).
class TransientError : public Error { using Error::Error; };

/// Non-retryable provider failure; `payload()` is the raw provider body.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, std::string payload)
        : Error(what), payload_(std::move(payload)) {}
    const std::string& payload() const noexcept { return payload_; }

private:
    std::string payload_;
};

}  // namespace arq
