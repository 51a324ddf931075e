#pragma once

// Label enumerations shared by the corpus, revision and context layers.
// Serialized names are lowercase snake_case and are part of the file formats.

#include <optional>
#include <span>
#include <string_view>

namespace arq {

enum class RevisionOp { NoChange, Add, Delete, Modify };
enum class EditType { Surface, Content };
enum class Element { Claim, Evidence, Reasoning };

enum class RerPurpose {
    // evidence
    Relevant,
    Irrelevant,
    RepeatedEvidence,
    NonTextBased,
    MinimalEvidence,
    // reasoning
    Lce,
    NotLce,
    ParaphraseEvidence,
    ParaphraseReasoning,
    Generic,
    Commentary,
    MinimalReasoning,
};

enum class QualityLabel { Unsuccessful = 0, Successful = 1 };

std::string_view name(RevisionOp v);
std::string_view name(EditType v);
std::string_view name(Element v);
std::string_view name(RerPurpose v);
std::string_view name(QualityLabel v);

template <class E>
std::optional<E> try_parse(std::string_view s);

template <> std::optional<RevisionOp> try_parse<RevisionOp>(std::string_view s);
template <> std::optional<EditType> try_parse<EditType>(std::string_view s);
template <> std::optional<Element> try_parse<Element>(std::string_view s);
template <> std::optional<RerPurpose> try_parse<RerPurpose>(std::string_view s);
template <> std::optional<QualityLabel> try_parse<QualityLabel>(std::string_view s);

/// The element a purpose label may attach to (Evidence or Reasoning).
Element purpose_element(RerPurpose p);

std::span<const RerPurpose> all_purposes();

}  // namespace arq
