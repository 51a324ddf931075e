#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <set>

#include "arq/pipeline.hpp"

namespace arq::testing {

std::filesystem::path data_dir() { return ARQ_DATA_DIR; }

Prepared prepare_synthetic(std::size_t max_essays, const std::vector<Condition>& conditions, int seed_runs) {
    Prepared p;
    const auto dir = data_dir() / "synthetic";
    p.corpus = load_corpus(dir / "corpus.jsonl");
    if (p.corpus.size() > max_essays) p.corpus.resize(max_essays);
    std::set<std::string> kept;
    for (const auto& d : p.corpus) kept.insert(d.essay_id);
    std::vector<GoldAnnotation> annotations;
    for (auto& a : load_annotations(dir / "annotations.jsonl"))
        if (kept.contains(a.essay_id)) annotations.push_back(std::move(a));
    const auto alignments = align_corpus(p.corpus, lcs_ratio);
    p.revisions = extract_corpus_revisions(p.corpus, alignments, annotations);
    p.contexts = location_contexts(p.corpus, alignments);
    llm::ChatClient client(std::make_shared<HeuristicProvider>());
    generate_contexts(p.corpus, conditions, seed_runs, client, {}, p.contexts);
    return p;
}

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("arq-test-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

double brute_force_alignment_score(const SimilarityMatrix& sim, double threshold) {
    const std::size_t n = sim.rows(), m = sim.cols();
    double best = 0.0;  // the empty matching
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t jmin, double acc) {
        best = std::max(best, acc);
        for (std::size_t r = i; r < n; ++r)
            for (std::size_t c = jmin; c < m; ++c) walk(r + 1, c + 1, acc + (sim(r, c) - threshold));
    };
    walk(0, 0, 0.0);
    return best;
}

SimilarityMatrix random_eighths(std::size_t rows, std::size_t cols, Rng& rng) {
    SimilarityMatrix s(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) s(i, j) = static_cast<double>(rng.index(9)) / 8.0;
    return s;
}

NamedDrafts named_drafts(const SimilarityMatrix& table) {
    NamedDrafts d;
    for (std::size_t i = 0; i < table.rows(); ++i) d.original.push_back({i, "o" + std::to_string(i)});
    for (std::size_t j = 0; j < table.cols(); ++j) d.revised.push_back({j, "r" + std::to_string(j)});
    d.sim = [table](std::string_view a, std::string_view b) {
        return table(std::stoul(std::string(a.substr(1))), std::stoul(std::string(b.substr(1))));
    };
    return d;
}

namespace {

struct Probe {
    double loss;
    std::vector<double> y;
};

Probe probe(const Batch& batch, const MlpParams& p) {
    Rng unused(0);
    auto f = forward_train(batch, p, 0.0, unused);
    return {f.loss, f.y};
}

bool same_relu_pattern(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a[i] > 0) != (b[i] > 0)) return false;
    return true;
}

}  // namespace

GradCheck gradient_check(std::uint64_t seed, std::size_t max_d, std::size_t max_h) {
    Rng rng(seed);
    const std::size_t d = 1 + rng.index(max_d);
    const std::size_t h = 1 + rng.index(max_h);
    const std::size_t B = 3 + rng.index(6);
    MlpParams params = MlpParams::init(d, h, rng);
    // Move away from the initial symmetric point so every tensor matters.
    for (auto& v : params.b1) v = rng.uniform(-0.5, 0.5);
    for (auto& v : params.gamma) v = rng.uniform(0.5, 1.5);
    for (auto& v : params.beta) v = rng.uniform(-0.5, 0.5);
    params.b2 = rng.uniform(-0.5, 0.5);

    Batch batch;
    batch.size = B;
    batch.width = 2 * d;
    for (std::size_t i = 0; i < B * 2 * d; ++i) batch.x.push_back(rng.uniform(-1, 1));
    for (std::size_t b = 0; b < B; ++b)
        batch.labels.push_back(rng.index(2) ? QualityLabel::Successful : QualityLabel::Unsuccessful);

    Rng unused(0);
    const auto fwd = forward_train(batch, params, 0.0, unused);
    const auto grads = backward(batch, fwd, params);

    GradCheck out;
    constexpr double kStep = 1e-4;
    auto check = [&](const char* tensor, std::vector<double>& theta, const std::vector<double>& analytic) {
        double diff2 = 0, a2 = 0, n2 = 0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + kStep;
            const auto up = probe(batch, params);
            theta[i] = saved - kStep;
            const auto down = probe(batch, params);
            theta[i] = saved;
            if (!same_relu_pattern(up.y, fwd.y) || !same_relu_pattern(down.y, fwd.y)) {
                ++out.skipped_at_kinks;
                continue;
            }
            const double numeric = (up.loss - down.loss) / (2 * kStep);
            diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
            ++out.checked;
        }
        const double err = std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-6);
        if (err >= out.max_relative_error) {
            out.max_relative_error = err;
            out.worst_tensor = tensor;
        }
    };
    check("w1", params.w1, grads.w1);
    check("b1", params.b1, grads.b1);
    check("gamma", params.gamma, grads.gamma);
    check("beta", params.beta, grads.beta);
    check("w2", params.w2, grads.w2);
    std::vector<double> b2{params.b2};
    {
        // b2 is a scalar member; route it through a one-element tensor.
        double diff, a = grads.b2;
        const double saved = params.b2;
        params.b2 = saved + kStep;
        const double up = probe(batch, params).loss;
        params.b2 = saved - kStep;
        const double down = probe(batch, params).loss;
        params.b2 = saved;
        const double numeric = (up - down) / (2 * kStep);
        diff = std::fabs(a - numeric) / std::max(std::fabs(a) + std::fabs(numeric), 1e-6);
        ++out.checked;
        if (diff >= out.max_relative_error) {
            out.max_relative_error = diff;
            out.worst_tensor = "b2";
        }
    }
    return out;
}

}  // namespace arq::testing
