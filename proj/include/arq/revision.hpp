#pragma once

// Revisions extracted from aligned drafts, quality encoding of RER purposes,
// and construction of the (revision text, context text) classifier examples.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arq/align.hpp"
#include "arq/corpus.hpp"
#include "arq/labels.hpp"

namespace arq {

struct Revision {
    std::string essay_id;
    std::size_t alignment_index = 0;
    AlignedPair alignment;
    RevisionOp op = RevisionOp::Add;
    EditType edit_type = EditType::Content;
    std::optional<Element> element;
    std::optional<RerPurpose> purpose;
    std::optional<QualityLabel> quality;
    std::optional<std::string> r1;  ///< original-side sentence
    std::optional<std::string> r2;  ///< revised-side sentence

    bool operator==(const Revision&) const = default;
};

/// Throws ValidationError if the R1/R2 presence rules do not hold.
void check_revision(const Revision& rev);

/// Lowercased, punctuation removed, whitespace collapsed and trimmed.
std::string normalize_for_surface(std::string_view text);

/// Add/Delete are Content; a Modify is Surface iff both sides normalize equal.
EditType classify_edit_type(std::optional<std::string_view> r1, std::optional<std::string_view> r2);

using EditTypeClassifier = std::function<EditType(std::optional<std::string_view>, std::optional<std::string_view>)>;

/// Evidence: only Relevant is successful. Reasoning: Lce and
/// ParaphraseReasoning are successful. Claim throws ContractError.
QualityLabel encode_quality(Element element, RerPurpose purpose);

/// One Revision per changed aligned pair. Gold annotations, when present for
/// a pair, supply edit type, element, purpose and quality; otherwise the
/// classifier decides the edit type and the labels stay empty.
std::vector<Revision> extract_revisions(const DraftPair& draft, const std::vector<AlignedPair>& pairs,
                                        const std::vector<GoldAnnotation>& annotations,
                                        const EditTypeClassifier& classifier = classify_edit_type);

/// Deleted sentences use R1; added and modified ones use R2.
const std::string& select_ar_text(const Revision& rev);

/// Draft side whose context pairs with the revision: Original for Delete.
DraftSide context_side(const Revision& rev);

/// Content revisions of evidence or reasoning with a known quality label.
bool is_argumentative(const Revision& rev);

void write_revisions(std::ostream& out, const std::vector<Revision>& revisions);
std::vector<Revision> parse_revisions(std::istream& in);
std::vector<Revision> load_revisions(const std::filesystem::path& path);

}  // namespace arq
