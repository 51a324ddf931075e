#pragma once

// Monotone sentence alignment of an original draft against its revision.
//
// The aligner maximizes the sum over matched cells of (sim(o, r) - threshold);
// skipping a sentence on either side scores 0. Only 1-1, 1-0 and 0-1 moves are
// allowed, so every sentence lands in exactly one AlignedPair.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arq/corpus.hpp"

namespace arq {

/// Deterministic score in [0,1]; sim(s, s) must be the maximum for s.
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

struct AlignConfig {
    double match_threshold = 0.5;

    void validate() const;
};

struct AlignedPair {
    std::optional<std::size_t> orig_index;
    std::optional<std::size_t> rev_index;
    RevisionOp op = RevisionOp::NoChange;

    bool operator==(const AlignedPair&) const = default;
};

/// Character-level longest common subsequence length over bytes.
std::size_t lcs_length(std::string_view a, std::string_view b);

/// LCS(a, b) / max(|a|, |b|); two empty strings score 1.
double lcs_ratio(std::string_view a, std::string_view b);

/// Exact-match similarity: 1 if byte-equal, else 0.
double exact_match(std::string_view a, std::string_view b);

/// Truth table: equal texts -> NoChange, both present and different ->
/// Modify, original absent -> Add, revised absent -> Delete.
RevisionOp label_pair(std::optional<std::string_view> original, std::optional<std::string_view> revised);

/// Dense similarity table, rows = original, columns = revised.
class SimilarityMatrix {
public:
    SimilarityMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    static SimilarityMatrix compute(const std::vector<Sentence>& original, const std::vector<Sentence>& revised,
                                    const SimilarityFn& sim);

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

/// Pairs with indices only; ops are left as NoChange for the caller to label.
/// Ties prefer match, then skip-original, then skip-revised.
std::vector<AlignedPair> align_matrix(const SimilarityMatrix& sim, const AlignConfig& cfg);

std::vector<AlignedPair> align_sentences(const std::vector<Sentence>& original, const std::vector<Sentence>& revised,
                                         const SimilarityFn& sim, const AlignConfig& cfg = {});

/// Objective value of an alignment under a similarity table.
double alignment_score(const std::vector<AlignedPair>& pairs, const SimilarityMatrix& sim, const AlignConfig& cfg);

using EssayAlignments = std::map<std::string, std::vector<AlignedPair>>;

EssayAlignments align_corpus(const std::vector<DraftPair>& corpus, const SimilarityFn& sim,
                             const AlignConfig& cfg = {});

AlignmentOps alignment_ops(const EssayAlignments& alignments);

/// Alignment dump: one `{essay_id, orig_index|null, rev_index|null, op}` per line.
void write_alignments(std::ostream& out, const std::vector<DraftPair>& corpus, const EssayAlignments& alignments);
EssayAlignments parse_alignments(std::istream& in);
EssayAlignments load_alignments(const std::filesystem::path& path);

}  // namespace arq
