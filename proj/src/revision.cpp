#include "arq/revision.hpp"

#include <cctype>
#include <ostream>

#include "jsonl.hpp"

namespace arq {

using detail::json;

void check_revision(const Revision& rev) {
    auto fail = [&](const char* msg) {
        throw ValidationError("revision " + rev.essay_id + "#" + std::to_string(rev.alignment_index) + ": " + msg);
    };
    if (rev.op == RevisionOp::NoChange) fail("op is no_change");
    if (rev.r1.has_value() != rev.alignment.orig_index.has_value()) fail("R1 presence disagrees with alignment");
    if (rev.r2.has_value() != rev.alignment.rev_index.has_value()) fail("R2 presence disagrees with alignment");
    if (rev.op == RevisionOp::Delete && !rev.r1) fail("delete without R1");
    if (rev.op == RevisionOp::Add && !rev.r2) fail("add without R2");
    if (rev.op == RevisionOp::Modify && !(rev.r1 && rev.r2)) fail("modify without both sides");
}

std::string normalize_for_surface(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::ispunct(c)) continue;
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

EditType classify_edit_type(std::optional<std::string_view> r1, std::optional<std::string_view> r2) {
    if (!r1 || !r2) return EditType::Content;
    return normalize_for_surface(*r1) == normalize_for_surface(*r2) ? EditType::Surface : EditType::Content;
}

QualityLabel encode_quality(Element element, RerPurpose purpose) {
    if (element == Element::Claim) throw ContractError("quality is undefined for claim revisions");
    if (purpose_element(purpose) != element)
        throw ContractError("purpose '" + std::string(name(purpose)) + "' does not attach to '" +
                            std::string(name(element)) + "'");
    switch (purpose) {
        case RerPurpose::Relevant:
        case RerPurpose::Lce:
        case RerPurpose::ParaphraseReasoning:
            return QualityLabel::Successful;
        default:
            return QualityLabel::Unsuccessful;
    }
}

std::vector<Revision> extract_revisions(const DraftPair& draft, const std::vector<AlignedPair>& pairs,
                                        const std::vector<GoldAnnotation>& annotations,
                                        const EditTypeClassifier& classifier) {
    std::vector<const GoldAnnotation*> by_index(pairs.size(), nullptr);
    for (const auto& a : annotations) {
        if (a.essay_id != draft.essay_id) continue;
        if (a.alignment_index >= pairs.size())
            throw ValidationError("annotation " + a.essay_id + "#" + std::to_string(a.alignment_index) +
                                  " points past the alignment");
        by_index[a.alignment_index] = &a;
    }

    std::vector<Revision> out;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        if (p.op == RevisionOp::NoChange) continue;
        Revision r;
        r.essay_id = draft.essay_id;
        r.alignment_index = k;
        r.alignment = p;
        r.op = p.op;
        if (p.orig_index) r.r1 = draft.original.at(*p.orig_index).text;
        if (p.rev_index) r.r2 = draft.revised.at(*p.rev_index).text;
        if (const auto* a = by_index[k]) {
            r.edit_type = a->edit_type;
            r.element = a->element;
            r.purpose = a->purpose;
            r.quality = a->quality;
        } else {
            r.edit_type = classifier(r.r1 ? std::optional<std::string_view>(*r.r1) : std::nullopt,
                                     r.r2 ? std::optional<std::string_view>(*r.r2) : std::nullopt);
        }
        check_revision(r);
        out.push_back(std::move(r));
    }
    return out;
}

const std::string& select_ar_text(const Revision& rev) {
    switch (rev.op) {
        case RevisionOp::Delete:
            if (!rev.r1 || rev.r1->empty()) throw ValidationError("delete revision without R1");
            return *rev.r1;
        case RevisionOp::Add:
        case RevisionOp::Modify:
            if (!rev.r2 || rev.r2->empty()) throw ValidationError("revision without R2");
            return *rev.r2;
        case RevisionOp::NoChange:
            break;
    }
    throw ContractError("select_ar_text on an unchanged pair");
}

DraftSide context_side(const Revision& rev) {
    return rev.op == RevisionOp::Delete ? DraftSide::Original : DraftSide::Revised;
}

bool is_argumentative(const Revision& rev) {
    return rev.edit_type == EditType::Content && rev.element &&
           (*rev.element == Element::Evidence || *rev.element == Element::Reasoning) && rev.quality.has_value();
}

void write_revisions(std::ostream& out, const std::vector<Revision>& revisions) {
    for (const auto& r : revisions) {
        json rec{{"essay_id", r.essay_id},
                 {"alignment_index", r.alignment_index},
                 {"orig_index", detail::opt_json(r.alignment.orig_index)},
                 {"rev_index", detail::opt_json(r.alignment.rev_index)},
                 {"op", name(r.op)},
                 {"edit_type", name(r.edit_type)},
                 {"element", detail::opt_name(r.element)},
                 {"purpose", detail::opt_name(r.purpose)},
                 {"quality", detail::opt_name(r.quality)},
                 {"r1", detail::opt_json(r.r1)},
                 {"r2", detail::opt_json(r.r2)}};
        out << rec.dump() << '\n';
    }
}

std::vector<Revision> parse_revisions(std::istream& in) {
    std::vector<Revision> out;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        Revision r;
        r.essay_id = detail::get_string(rec, "essay_id", line_no);
        r.alignment_index = detail::get_index(rec, "alignment_index", line_no);
        r.op = detail::get_enum<RevisionOp>(rec, "op", line_no);
        r.alignment = {detail::get_opt_index(rec, "orig_index", line_no),
                       detail::get_opt_index(rec, "rev_index", line_no), r.op};
        r.edit_type = detail::get_enum<EditType>(rec, "edit_type", line_no);
        r.element = detail::get_opt_enum<Element>(rec, "element", line_no);
        r.purpose = detail::get_opt_enum<RerPurpose>(rec, "purpose", line_no);
        r.quality = detail::get_opt_enum<QualityLabel>(rec, "quality", line_no);
        r.r1 = detail::get_opt_string(rec, "r1", line_no);
        r.r2 = detail::get_opt_string(rec, "r2", line_no);
        check_revision(r);
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<Revision> load_revisions(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_revisions(in);
}

}  // namespace arq
