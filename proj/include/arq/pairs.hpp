#pragma once

// Classifier examples: the revision text paired with its context text.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arq/context.hpp"
#include "arq/revision.hpp"

namespace arq {

struct ArPair {
    std::string essay_id;
    std::size_t alignment_index = 0;
    std::string ar_text;
    std::string ac_text;
    ContextKind ac_kind = ContextKind::BaseLong;
    std::optional<PromptStrategy> ac_strategy;
    QualityLabel label = QualityLabel::Unsuccessful;

    bool operator==(const ArPair&) const = default;
};

/// One pair per argumentative revision (see is_argumentative). Generated
/// contexts come from the draft side the revision text lives on, for the
/// given seed run. Location contexts may be empty; generated ones may not.
std::vector<ArPair> build_ar_pairs(const std::vector<Revision>& revisions, const ContextStore& contexts,
                                   const Condition& condition, int seed_run = 0);

/// Dump: {essay_id, alignment_index, ar_text, ac_text, ac_kind, ac_strategy, label}.
void write_ar_pairs(std::ostream& out, const std::vector<ArPair>& pairs);
std::vector<ArPair> parse_ar_pairs(std::istream& in);

}  // namespace arq
