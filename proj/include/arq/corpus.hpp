#pragma once

// Paired essay drafts and gold revision annotations.
//
// Corpus file: JSON Lines, one essay per line:
//   {"essay_id": "...", "prompt_id": "...",
//    "original": ["s1", ...] | "original_text": "raw text",
//    "revised":  ["s1", ...] | "revised_text":  "raw text"}
// A pre-segmented array wins over the raw text form when both are present.
//
// Annotation file: JSON Lines, one GoldAnnotation per line with enum values
// written as their snake_case names (see labels.hpp).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arq/labels.hpp"

namespace arq {

struct Sentence {
    std::size_t index = 0;
    std::string text;

    bool operator==(const Sentence&) const = default;
};

struct DraftPair {
    std::string essay_id;
    std::string prompt_id;
    std::vector<Sentence> original;
    std::vector<Sentence> revised;

    bool operator==(const DraftPair&) const = default;
};

enum class DraftSide { Original, Revised };
std::string_view name(DraftSide s);
template <> std::optional<DraftSide> try_parse<DraftSide>(std::string_view s);

const std::vector<Sentence>& sentences(const DraftPair& d, DraftSide side);

/// Space-joined text of one draft.
std::string draft_text(const DraftPair& d, DraftSide side);

/// Splits at '.', '!' or '?' followed by whitespace. The trailing fragment is
/// kept; pieces are trimmed and line breaks inside a piece become spaces.
/// Abbreviations are not special-cased: "Mr. Smith ran." gives two pieces.
std::vector<Sentence> segment_text(std::string_view raw);

std::vector<Sentence> make_sentences(const std::vector<std::string>& texts);

std::vector<DraftPair> parse_corpus(std::istream& in);
std::vector<DraftPair> load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<DraftPair>& corpus);

struct GoldAnnotation {
    std::string essay_id;
    std::size_t alignment_index = 0;
    RevisionOp op = RevisionOp::Add;
    EditType edit_type = EditType::Content;
    Element element = Element::Claim;
    std::optional<RerPurpose> purpose;
    std::optional<QualityLabel> quality;

    bool operator==(const GoldAnnotation&) const = default;
};

/// Per essay, the op of every aligned pair in alignment order. Annotations
/// are checked against it for dangling references.
using AlignmentOps = std::map<std::string, std::vector<RevisionOp>>;

/// Parses and validates label consistency only. Quality is filled in from the
/// purpose when absent.
std::vector<GoldAnnotation> parse_annotations(std::istream& in);

/// As above, plus every annotation must point at an existing aligned pair
/// whose op matches.
std::vector<GoldAnnotation> parse_annotations(std::istream& in, const AlignmentOps& refs);

/// Throws ValidationError on the first dangling or op-mismatched annotation.
void check_annotation_refs(const std::vector<GoldAnnotation>& annotations, const AlignmentOps& refs);

std::vector<GoldAnnotation> load_annotations(const std::filesystem::path& path);
std::vector<GoldAnnotation> load_annotations(const std::filesystem::path& path, const AlignmentOps& refs);

void write_annotations(std::ostream& out, const std::vector<GoldAnnotation>& annotations);

}  // namespace arq
