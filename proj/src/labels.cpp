#include "arq/labels.hpp"

#include <array>
#include <utility>

namespace arq {
namespace {

template <class E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
    for (const auto& [v, n] : table)
        if (n == s) return v;
    return std::nullopt;
}

template <class E, std::size_t N>
std::string_view reverse(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, n] : table)
        if (e == v) return n;
    return "?";
}

constexpr std::array<std::pair<RevisionOp, std::string_view>, 4> kOps{{
    {RevisionOp::NoChange, "no_change"},
    {RevisionOp::Add, "add"},
    {RevisionOp::Delete, "delete"},
    {RevisionOp::Modify, "modify"},
}};

constexpr std::array<std::pair<EditType, std::string_view>, 2> kEdits{{
    {EditType::Surface, "surface"},
    {EditType::Content, "content"},
}};

constexpr std::array<std::pair<Element, std::string_view>, 3> kElements{{
    {Element::Claim, "claim"},
    {Element::Evidence, "evidence"},
    {Element::Reasoning, "reasoning"},
}};

constexpr std::array<std::pair<RerPurpose, std::string_view>, 12> kPurposes{{
    {RerPurpose::Relevant, "relevant"},
    {RerPurpose::Irrelevant, "irrelevant"},
    {RerPurpose::RepeatedEvidence, "repeated_evidence"},
    {RerPurpose::NonTextBased, "non_text_based"},
    {RerPurpose::MinimalEvidence, "minimal_evidence"},
    {RerPurpose::Lce, "lce"},
    {RerPurpose::NotLce, "not_lce"},
    {RerPurpose::ParaphraseEvidence, "paraphrase_evidence"},
    {RerPurpose::ParaphraseReasoning, "paraphrase_reasoning"},
    {RerPurpose::Generic, "generic"},
    {RerPurpose::Commentary, "commentary"},
    {RerPurpose::MinimalReasoning, "minimal_reasoning"},
}};

constexpr std::array<std::pair<QualityLabel, std::string_view>, 2> kQuality{{
    {QualityLabel::Successful, "successful"},
    {QualityLabel::Unsuccessful, "unsuccessful"},
}};

constexpr std::array<RerPurpose, 12> kAllPurposes{
    RerPurpose::Relevant,   RerPurpose::Irrelevant,         RerPurpose::RepeatedEvidence,
    RerPurpose::NonTextBased, RerPurpose::MinimalEvidence,  RerPurpose::Lce,
    RerPurpose::NotLce,     RerPurpose::ParaphraseEvidence, RerPurpose::ParaphraseReasoning,
    RerPurpose::Generic,    RerPurpose::Commentary,         RerPurpose::MinimalReasoning,
};

}  // namespace

std::string_view name(RevisionOp v) { return reverse(kOps, v); }
std::string_view name(EditType v) { return reverse(kEdits, v); }
std::string_view name(Element v) { return reverse(kElements, v); }
std::string_view name(RerPurpose v) { return reverse(kPurposes, v); }
std::string_view name(QualityLabel v) { return reverse(kQuality, v); }

template <> std::optional<RevisionOp> try_parse<RevisionOp>(std::string_view s) { return lookup(kOps, s); }
template <> std::optional<EditType> try_parse<EditType>(std::string_view s) { return lookup(kEdits, s); }
template <> std::optional<Element> try_parse<Element>(std::string_view s) { return lookup(kElements, s); }
template <> std::optional<RerPurpose> try_parse<RerPurpose>(std::string_view s) { return lookup(kPurposes, s); }
template <> std::optional<QualityLabel> try_parse<QualityLabel>(std::string_view s) { return lookup(kQuality, s); }

Element purpose_element(RerPurpose p) {
    switch (p) {
        case RerPurpose::Relevant:
        case RerPurpose::Irrelevant:
        case RerPurpose::RepeatedEvidence:
        case RerPurpose::NonTextBased:
        case RerPurpose::MinimalEvidence:
            return Element::Evidence;
        default:
            return Element::Reasoning;
    }
}

std::span<const RerPurpose> all_purposes() { return kAllPurposes; }

}  // namespace arq
