#pragma once

// Corpus-level glue between the stages, shared by the command-line tool and
// the Python bindings.

#include <string>
#include <vector>

#include "arq/align.hpp"
#include "arq/context.hpp"
#include "arq/corpus.hpp"
#include "arq/revision.hpp"

namespace arq {

/// File names of the stage artifacts inside an output directory.
namespace artifact {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kAnnotations = "annotations.jsonl";
inline constexpr const char* kAlignments = "alignments.jsonl";
inline constexpr const char* kRevisions = "revisions.jsonl";
inline constexpr const char* kContexts = "contexts.jsonl";
inline constexpr const char* kPairsDir = "pairs";
inline constexpr const char* kModelsDir = "models";
inline constexpr const char* kReportDir = "report";
inline constexpr const char* kCacheDir = "cache";
}  // namespace artifact

/// Checks the annotations against the alignments, then extracts the
/// revisions of every essay in corpus order.
std::vector<Revision> extract_corpus_revisions(const std::vector<DraftPair>& corpus,
                                               const EssayAlignments& alignments,
                                               const std::vector<GoldAnnotation>& annotations,
                                               const EditTypeClassifier& classifier = classify_edit_type);

/// Base-Short and Base-Long contexts for every changed pair in the corpus.
ContextStore location_contexts(const std::vector<DraftPair>& corpus, const EssayAlignments& alignments);

/// "ac-reasoning:cot" with seed run 1 becomes "ac-reasoning_cot.seed1.jsonl".
std::string pairs_file_name(const Condition& condition, int seed_run);

}  // namespace arq
