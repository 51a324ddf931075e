#include "arq/pipeline.hpp"

#include <map>

#include "arq/error.hpp"

namespace arq {

std::vector<Revision> extract_corpus_revisions(const std::vector<DraftPair>& corpus,
                                               const EssayAlignments& alignments,
                                               const std::vector<GoldAnnotation>& annotations,
                                               const EditTypeClassifier& classifier) {
    check_annotation_refs(annotations, alignment_ops(alignments));
    std::map<std::string, std::vector<GoldAnnotation>> by_essay;
    for (const auto& a : annotations) by_essay[a.essay_id].push_back(a);

    std::vector<Revision> out;
    for (const auto& draft : corpus) {
        auto it = alignments.find(draft.essay_id);
        if (it == alignments.end()) throw LookupError("no alignment for essay '" + draft.essay_id + "'");
        static const std::vector<GoldAnnotation> kNone;
        auto ann = by_essay.find(draft.essay_id);
        auto revs = extract_revisions(draft, it->second, ann == by_essay.end() ? kNone : ann->second, classifier);
        for (auto& r : revs) out.push_back(std::move(r));
    }
    return out;
}

ContextStore location_contexts(const std::vector<DraftPair>& corpus, const EssayAlignments& alignments) {
    ContextStore store;
    for (const auto& draft : corpus) {
        auto it = alignments.find(draft.essay_id);
        if (it == alignments.end()) throw LookupError("no alignment for essay '" + draft.essay_id + "'");
        for (auto& ctx : build_base_contexts(draft, it->second)) store.insert(std::move(ctx));
    }
    return store;
}

std::string pairs_file_name(const Condition& condition, int seed_run) {
    std::string label = condition.label();
    for (char& c : label)
        if (c == ':') c = '_';
    return label + ".seed" + std::to_string(seed_run) + ".jsonl";
}

}  // namespace arq
