#pragma once

// Internal helpers for the JSON Lines formats.

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "arq/error.hpp"
#include "arq/labels.hpp"

namespace arq::detail {

using json = nlohmann::json;

/// Calls `fn(record, line_no)` for every non-blank line.
template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed record: ") + e.what(), line_no);
        }
        if (!rec.is_object()) throw ParseError("record is not an object", line_no);
        fn(rec, line_no);
    }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return in;
}

inline std::string get_string(const json& rec, const char* key, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string())
        throw ParseError(std::string("missing string field '") + key + "'", line_no);
    return it->get<std::string>();
}

inline std::optional<std::string> get_opt_string(const json& rec, const char* key, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string("field '") + key + "' is not a string", line_no);
    return it->get<std::string>();
}

inline std::optional<std::size_t> get_opt_index(const json& rec, const char* key, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
        throw ParseError(std::string("field '") + key + "' is not a non-negative integer", line_no);
    return it->get<std::size_t>();
}

inline std::size_t get_index(const json& rec, const char* key, std::size_t line_no) {
    auto v = get_opt_index(rec, key, line_no);
    if (!v) throw ParseError(std::string("missing integer field '") + key + "'", line_no);
    return *v;
}

template <class E>
E get_enum(const json& rec, const char* key, std::size_t line_no) {
    auto s = get_string(rec, key, line_no);
    auto v = try_parse<E>(s);
    if (!v) throw ParseError(std::string("unknown value '") + s + "' for '" + key + "'", line_no);
    return *v;
}

template <class E>
std::optional<E> get_opt_enum(const json& rec, const char* key, std::size_t line_no) {
    auto s = get_opt_string(rec, key, line_no);
    if (!s) return std::nullopt;
    auto v = try_parse<E>(*s);
    if (!v) throw ParseError("unknown value '" + *s + "' for '" + key + "'", line_no);
    return v;
}

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <class E>
json opt_name(const std::optional<E>& v) {
    return v ? json(std::string(name(*v))) : json(nullptr);
}

/// Writes to `path` through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace arq::detail
