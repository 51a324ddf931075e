#include "arq/align.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "jsonl.hpp"

namespace arq {

using detail::json;

void AlignConfig::validate() const {
    if (!(match_threshold > 0.0 && match_threshold < 1.0))
        throw ConfigError("match_threshold must lie in (0, 1), got " + std::to_string(match_threshold));
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (char ca : a) {
        for (std::size_t j = 0; j < b.size(); ++j)
            cur[j + 1] = ca == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double lcs_ratio(std::string_view a, std::string_view b) {
    const auto longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return static_cast<double>(lcs_length(a, b)) / static_cast<double>(longest);
}

double exact_match(std::string_view a, std::string_view b) { return a == b ? 1.0 : 0.0; }

RevisionOp label_pair(std::optional<std::string_view> original, std::optional<std::string_view> revised) {
    if (!original && !revised) throw ContractError("label_pair: both sides absent");
    if (!original) return RevisionOp::Add;
    if (!revised) return RevisionOp::Delete;
    return *original == *revised ? RevisionOp::NoChange : RevisionOp::Modify;
}

SimilarityMatrix SimilarityMatrix::compute(const std::vector<Sentence>& original,
                                           const std::vector<Sentence>& revised, const SimilarityFn& sim) {
    SimilarityMatrix m(original.size(), revised.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        for (std::size_t j = 0; j < revised.size(); ++j) m(i, j) = sim(original[i].text, revised[j].text);
    return m;
}

std::vector<AlignedPair> align_matrix(const SimilarityMatrix& sim, const AlignConfig& cfg) {
    cfg.validate();
    const std::size_t n = sim.rows(), m = sim.cols();
    const std::size_t w = m + 1;
    std::vector<double> best((n + 1) * w, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return best[i * w + j]; };

    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            if (i == 0 && j == 0) continue;
            double v = -std::numeric_limits<double>::infinity();
            if (i > 0 && j > 0) v = std::max(v, at(i - 1, j - 1) + (sim(i - 1, j - 1) - cfg.match_threshold));
            if (i > 0) v = std::max(v, at(i - 1, j));
            if (j > 0) v = std::max(v, at(i, j - 1));
            at(i, j) = v;
        }
    }

    // Backtrace recomputes each candidate exactly as the forward pass did, so
    // equality comparisons are safe.
    std::vector<AlignedPair> rev;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const double here = at(i, j);
        if (i > 0 && j > 0 && at(i - 1, j - 1) + (sim(i - 1, j - 1) - cfg.match_threshold) == here) {
            rev.push_back({i - 1, j - 1, RevisionOp::NoChange});
            --i, --j;
        } else if (i > 0 && at(i - 1, j) == here) {
            rev.push_back({i - 1, std::nullopt, RevisionOp::Delete});
            --i;
        } else {
            rev.push_back({std::nullopt, j - 1, RevisionOp::Add});
            --j;
        }
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

std::vector<AlignedPair> align_sentences(const std::vector<Sentence>& original, const std::vector<Sentence>& revised,
                                         const SimilarityFn& sim, const AlignConfig& cfg) {
    auto pairs = align_matrix(SimilarityMatrix::compute(original, revised, sim), cfg);
    for (auto& p : pairs) {
        std::optional<std::string_view> os, rs;
        if (p.orig_index) os = original[*p.orig_index].text;
        if (p.rev_index) rs = revised[*p.rev_index].text;
        p.op = label_pair(os, rs);
    }
    return pairs;
}

double alignment_score(const std::vector<AlignedPair>& pairs, const SimilarityMatrix& sim, const AlignConfig& cfg) {
    double total = 0.0;
    for (const auto& p : pairs)
        if (p.orig_index && p.rev_index) total += sim(*p.orig_index, *p.rev_index) - cfg.match_threshold;
    return total;
}

EssayAlignments align_corpus(const std::vector<DraftPair>& corpus, const SimilarityFn& sim, const AlignConfig& cfg) {
    EssayAlignments out;
    for (const auto& d : corpus) {
        if (out.contains(d.essay_id)) throw ValidationError("duplicate essay_id '" + d.essay_id + "'");
        out.emplace(d.essay_id, align_sentences(d.original, d.revised, sim, cfg));
    }
    return out;
}

AlignmentOps alignment_ops(const EssayAlignments& alignments) {
    AlignmentOps ops;
    for (const auto& [id, pairs] : alignments) {
        auto& v = ops[id];
        for (const auto& p : pairs) v.push_back(p.op);
    }
    return ops;
}

void write_alignments(std::ostream& out, const std::vector<DraftPair>& corpus, const EssayAlignments& alignments) {
    for (const auto& d : corpus) {
        auto it = alignments.find(d.essay_id);
        if (it == alignments.end()) continue;
        for (const auto& p : it->second) {
            json rec{{"essay_id", d.essay_id},
                     {"orig_index", detail::opt_json(p.orig_index)},
                     {"rev_index", detail::opt_json(p.rev_index)},
                     {"op", name(p.op)}};
            out << rec.dump() << '\n';
        }
    }
}

EssayAlignments parse_alignments(std::istream& in) {
    EssayAlignments out;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        AlignedPair p;
        auto id = detail::get_string(rec, "essay_id", line_no);
        p.orig_index = detail::get_opt_index(rec, "orig_index", line_no);
        p.rev_index = detail::get_opt_index(rec, "rev_index", line_no);
        p.op = detail::get_enum<RevisionOp>(rec, "op", line_no);
        if (!p.orig_index && !p.rev_index) throw ParseError("aligned pair with neither index", line_no);
        out[id].push_back(p);
    });
    return out;
}

EssayAlignments load_alignments(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_alignments(in);
}

}  // namespace arq
