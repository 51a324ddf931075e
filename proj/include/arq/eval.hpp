#pragma once

// Cross-validation protocol, metrics and significance tests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arq/context.hpp"
#include "arq/labels.hpp"
#include "arq/model.hpp"

namespace arq {

struct ArPair;
struct Revision;

struct FoldSplit {
    int fold_id = 0;
    std::vector<std::size_t> train, dev, test;  ///< indices into the pair list, ascending
};

/// Essay-level folds. Essays are grouped by their majority label, each group
/// is shuffled with `seed` and essays are dealt to folds in turn. The dev set
/// is round(20%) of the remaining essays (at least one), chosen by a shuffle
/// seeded with seed + fold.
std::vector<FoldSplit> kfold_split(const std::vector<ArPair>& pairs, int k, std::uint64_t seed);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool operator==(const PRF&) const = default;
};

/// Unweighted mean over both quality classes. A class absent from golds and
/// preds scores 1 on every metric; a zero denominator inside a class gives 0.
PRF macro_prf(std::span<const QualityLabel> preds, std::span<const QualityLabel> golds);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant = false;  ///< p < 0.05
    std::size_t n = 0;
};

/// Two-tailed paired t-test on a - b. All-zero differences give t = 0, p = 1.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Multi-class Cohen's kappa. When chance agreement is 1, kappa is 1 if the
/// observed agreement is 1 and 0 otherwise.
double cohen_kappa(std::span<const int> x, std::span<const int> y);

enum class Scope { All, Reasoning, Evidence };
std::string_view name(Scope s);
enum class Metric { Precision, Recall, F1 };
std::string_view name(Metric m);
double metric_of(const PRF& prf, Metric m);

struct ExperimentConfig {
    std::vector<Condition> conditions;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int k = 10;
    TrainConfig train;
    /// When set, gold labels are permuted with this seed before splitting.
    std::optional<std::uint64_t> label_permutation_seed;
    int workers = 1;

    void validate() const;
};

struct FoldResult {
    Condition condition;
    std::uint64_t seed = 0;
    int fold = 0;
    std::size_t n_train = 0, n_dev = 0, n_test = 0;
    int best_epoch = -1;
    PRF all;
    std::optional<PRF> reasoning, evidence;

    std::optional<PRF> scope(Scope s) const;
};

struct Aggregate {
    Condition condition;
    Scope scope = Scope::All;
    PRF mean;
    std::size_t runs = 0;
};

struct Comparison {
    Condition condition;  ///< compared against base-long
    Scope scope = Scope::All;
    Metric metric = Metric::F1;
    double mean_difference = 0.0;
    TTestResult test;
};

class ExperimentReport {
public:
    std::uint64_t config_digest = 0;
    std::vector<std::uint64_t> seeds;
    int k = 0;
    bool shuffled_labels = false;
    std::vector<Condition> conditions;
    std::vector<FoldResult> rows;  ///< (condition, seed, fold) order

    /// Recomputes aggregates and comparisons from `rows`.
    void finalize();

    const std::vector<Aggregate>& aggregates() const { return aggregates_; }
    const std::vector<Comparison>& comparisons() const { return comparisons_; }
    const Aggregate* find(const Condition& c, Scope s) const;
    const Comparison* find(const Condition& c, Scope s, Metric m) const;

    std::string to_json() const;
    std::string to_text() const;
    /// Conditions by (scope x metric) in percent, "+" marks a significant
    /// gain over base-long, "*" marks a CoT cell above its Single twin.
    std::string to_table() const;

    static ExperimentReport from_json(std::string_view text);

    /// Writes report.json, report.txt and table.txt into `dir`.
    void write(const std::filesystem::path& dir) const;

private:
    std::vector<Aggregate> aggregates_;
    std::vector<Comparison> comparisons_;
};

/// Trains and scores every (condition, seed, fold). The seed drives both the
/// split and the trainer; generated contexts are looked up with seed_run =
/// position of the seed in `cfg.seeds`. Every distinct text is embedded once.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::vector<Revision>& revisions,
                                const ContextStore& contexts, Embedder& embedder);

}  // namespace arq
