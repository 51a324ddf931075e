#include "arq/corpus.hpp"

#include <ostream>
#include <set>
#include <sstream>

#include "arq/revision.hpp"
#include "jsonl.hpp"

namespace arq {

using detail::json;

std::string_view name(DraftSide s) { return s == DraftSide::Original ? "original" : "revised"; }

template <> std::optional<DraftSide> try_parse<DraftSide>(std::string_view s) {
    if (s == "original") return DraftSide::Original;
    if (s == "revised") return DraftSide::Revised;
    return std::nullopt;
}

const std::vector<Sentence>& sentences(const DraftPair& d, DraftSide side) {
    return side == DraftSide::Original ? d.original : d.revised;
}

std::string draft_text(const DraftPair& d, DraftSide side) {
    std::string out;
    for (const auto& s : sentences(d, side)) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string clean_piece(std::string_view piece) {
    std::size_t b = 0, e = piece.size();
    while (b < e && is_space(piece[b])) ++b;
    while (e > b && is_space(piece[e - 1])) --e;
    std::string out(piece.substr(b, e - b));
    for (char& c : out)
        if (c == '\n' || c == '\r') c = ' ';
    return out;
}

void check_sentence_text(const std::string& text, std::size_t line_no) {
    if (text.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty sentence");
    if (text.find_first_of("\n\r") != std::string::npos)
        throw ValidationError("line " + std::to_string(line_no) + ": sentence contains a line break");
}

std::vector<Sentence> read_side(const json& rec, const char* array_key, const char* text_key,
                                std::size_t line_no) {
    if (auto it = rec.find(array_key); it != rec.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError(std::string("'") + array_key + "' is not an array", line_no);
        std::vector<std::string> texts;
        for (const auto& s : *it) {
            if (!s.is_string()) throw ParseError(std::string("'") + array_key + "' holds a non-string", line_no);
            texts.push_back(s.get<std::string>());
            check_sentence_text(texts.back(), line_no);
        }
        return make_sentences(texts);
    }
    if (auto raw = detail::get_opt_string(rec, text_key, line_no)) return segment_text(*raw);
    throw ParseError(std::string("missing '") + array_key + "' or '" + text_key + "'", line_no);
}

}  // namespace

std::vector<Sentence> segment_text(std::string_view raw) {
    std::vector<Sentence> out;
    auto emit = [&](std::string_view piece) {
        auto text = clean_piece(piece);
        if (!text.empty()) out.push_back({out.size(), std::move(text)});
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if ((c == '.' || c == '!' || c == '?') && is_space(raw[i + 1])) {
            emit(raw.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < raw.size()) emit(raw.substr(start));
    return out;
}

std::vector<Sentence> make_sentences(const std::vector<std::string>& texts) {
    std::vector<Sentence> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back({out.size(), t});
    return out;
}

std::vector<DraftPair> parse_corpus(std::istream& in) {
    std::vector<DraftPair> corpus;
    std::set<std::string> seen;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        DraftPair d;
        d.essay_id = detail::get_string(rec, "essay_id", line_no);
        if (d.essay_id.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty essay_id");
        if (!seen.insert(d.essay_id).second)
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate essay_id '" + d.essay_id + "'");
        d.prompt_id = detail::get_opt_string(rec, "prompt_id", line_no).value_or("");
        d.original = read_side(rec, "original", "original_text", line_no);
        d.revised = read_side(rec, "revised", "revised_text", line_no);
        if (d.original.empty() && d.revised.empty())
            throw ValidationError("line " + std::to_string(line_no) + ": essay '" + d.essay_id + "' has no sentences");
        corpus.push_back(std::move(d));
    });
    return corpus;
}

std::vector<DraftPair> load_corpus(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<DraftPair>& corpus) {
    for (const auto& d : corpus) {
        json orig = json::array(), rev = json::array();
        for (const auto& s : d.original) orig.push_back(s.text);
        for (const auto& s : d.revised) rev.push_back(s.text);
        json rec{{"essay_id", d.essay_id}, {"prompt_id", d.prompt_id}, {"original", orig}, {"revised", rev}};
        out << rec.dump() << '\n';
    }
}

namespace {

void validate_labels(GoldAnnotation& a, std::size_t line_no) {
    auto fail = [&](const std::string& msg) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + msg);
    };
    if (a.essay_id.empty()) fail("empty essay_id");
    if (a.op == RevisionOp::NoChange) fail("annotation on an unchanged pair");
    if (a.element == Element::Claim) {
        if (a.purpose) fail("claim revisions carry no RER purpose");
        if (a.quality) fail("claim revisions carry no quality label");
        return;
    }
    if (!a.purpose) fail(std::string(name(a.element)) + " revision without a purpose");
    if (purpose_element(*a.purpose) != a.element)
        fail("purpose '" + std::string(name(*a.purpose)) + "' does not attach to element '" +
             std::string(name(a.element)) + "'");
    auto expected = encode_quality(a.element, *a.purpose);
    if (a.quality && *a.quality != expected)
        fail("stored quality '" + std::string(name(*a.quality)) + "' contradicts purpose '" +
             std::string(name(*a.purpose)) + "'");
    a.quality = expected;
}

std::vector<GoldAnnotation> parse_annotations_impl(std::istream& in, const AlignmentOps* refs) {
    std::vector<GoldAnnotation> out;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        GoldAnnotation a;
        a.essay_id = detail::get_string(rec, "essay_id", line_no);
        a.alignment_index = detail::get_index(rec, "alignment_index", line_no);
        a.op = detail::get_enum<RevisionOp>(rec, "op", line_no);
        a.edit_type = detail::get_enum<EditType>(rec, "edit_type", line_no);
        a.element = detail::get_enum<Element>(rec, "element", line_no);
        a.purpose = detail::get_opt_enum<RerPurpose>(rec, "purpose", line_no);
        a.quality = detail::get_opt_enum<QualityLabel>(rec, "quality", line_no);
        validate_labels(a, line_no);
        if (refs) {
            try {
                check_annotation_refs({a}, *refs);
            } catch (const ValidationError& e) {
                throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        out.push_back(std::move(a));
    });
    return out;
}

}  // namespace

void check_annotation_refs(const std::vector<GoldAnnotation>& annotations, const AlignmentOps& refs) {
    for (const auto& a : annotations) {
        auto it = refs.find(a.essay_id);
        if (it == refs.end()) throw ValidationError("unknown essay_id '" + a.essay_id + "'");
        if (a.alignment_index >= it->second.size())
            throw ValidationError("alignment_index " + std::to_string(a.alignment_index) +
                                  " out of range for essay '" + a.essay_id + "'");
        if (it->second[a.alignment_index] != a.op)
            throw ValidationError("op '" + std::string(name(a.op)) + "' of " + a.essay_id + "#" +
                                  std::to_string(a.alignment_index) + " disagrees with aligned pair op '" +
                                  std::string(name(it->second[a.alignment_index])) + "'");
    }
}

std::vector<GoldAnnotation> parse_annotations(std::istream& in) { return parse_annotations_impl(in, nullptr); }

std::vector<GoldAnnotation> parse_annotations(std::istream& in, const AlignmentOps& refs) {
    return parse_annotations_impl(in, &refs);
}

std::vector<GoldAnnotation> load_annotations(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_annotations(in);
}

std::vector<GoldAnnotation> load_annotations(const std::filesystem::path& path, const AlignmentOps& refs) {
    auto in = detail::open_input(path);
    return parse_annotations(in, refs);
}

void write_annotations(std::ostream& out, const std::vector<GoldAnnotation>& annotations) {
    for (const auto& a : annotations) {
        json rec{{"essay_id", a.essay_id},
                 {"alignment_index", a.alignment_index},
                 {"op", name(a.op)},
                 {"edit_type", name(a.edit_type)},
                 {"element", name(a.element)},
                 {"purpose", detail::opt_name(a.purpose)},
                 {"quality", detail::opt_name(a.quality)}};
        out << rec.dump() << '\n';
    }
}

}  // namespace arq
