#include "arq/pairs.hpp"

#include <ostream>

#include "jsonl.hpp"

namespace arq {

using detail::json;

std::vector<ArPair> build_ar_pairs(const std::vector<Revision>& revisions, const ContextStore& contexts,
                                   const Condition& condition, int seed_run) {
    std::vector<ArPair> out;
    for (const auto& rev : revisions) {
        if (!is_argumentative(rev)) continue;
        const ArgContext* ctx = nullptr;
        if (is_generated(condition.kind)) {
            ctx = contexts.find_generated(rev.essay_id, context_side(rev), condition.kind, *condition.strategy,
                                          seed_run);
        } else {
            ctx = contexts.find_location(rev.essay_id, rev.alignment_index, condition.kind);
        }
        if (!ctx)
            throw LookupError("no " + condition.label() + " context for essay '" + rev.essay_id + "' (" +
                              std::string(name(context_side(rev))) + " draft, revision " +
                              std::to_string(rev.alignment_index) + ", seed run " + std::to_string(seed_run) + ")");
        if (is_generated(condition.kind) && ctx->text.empty())
            throw ValidationError("empty generated context for essay '" + rev.essay_id + "'");
        out.push_back({rev.essay_id, rev.alignment_index, select_ar_text(rev), ctx->text, condition.kind,
                       condition.strategy, *rev.quality});
    }
    return out;
}

void write_ar_pairs(std::ostream& out, const std::vector<ArPair>& pairs) {
    for (const auto& p : pairs) {
        json rec{{"essay_id", p.essay_id},
                 {"alignment_index", p.alignment_index},
                 {"ar_text", p.ar_text},
                 {"ac_text", p.ac_text},
                 {"ac_kind", name(p.ac_kind)},
                 {"ac_strategy", detail::opt_name(p.ac_strategy)},
                 {"label", name(p.label)}};
        out << rec.dump() << '\n';
    }
}

std::vector<ArPair> parse_ar_pairs(std::istream& in) {
    std::vector<ArPair> out;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        ArPair p;
        p.essay_id = detail::get_string(rec, "essay_id", line_no);
        p.alignment_index = detail::get_index(rec, "alignment_index", line_no);
        p.ar_text = detail::get_string(rec, "ar_text", line_no);
        if (p.ar_text.empty()) throw ParseError("empty ar_text", line_no);
        p.ac_text = detail::get_string(rec, "ac_text", line_no);
        p.ac_kind = detail::get_enum<ContextKind>(rec, "ac_kind", line_no);
        p.ac_strategy = detail::get_opt_enum<PromptStrategy>(rec, "ac_strategy", line_no);
        p.label = detail::get_enum<QualityLabel>(rec, "label", line_no);
        out.push_back(std::move(p));
    });
    return out;
}

}  // namespace arq
