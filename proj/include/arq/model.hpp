#pragma once

// Revision-quality classifier head.
//
//   x      = [pool(AR tokens) ; pool(AC tokens)]            (2d)
//   z      = W1^T x + b1                                    (h)
//   y      = gamma * (z - mean) / sqrt(var + eps) + beta     batch stats in
//                                                            training, running
//                                                            stats in eval
//   a      = dropout(relu(y))                               inverted scaling
//   p      = sigmoid(w2 . a + b2)
//
// Loss is binary cross-entropy with p clamped to [1e-7, 1 - 1e-7], averaged
// over the batch. Training uses Adam with a step-decayed learning rate and
// keeps the parameters of the epoch with the best dev macro-F1.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "arq/embed.hpp"
#include "arq/labels.hpp"

namespace arq {

struct ArPair;

/// Seeded generator with platform-independent derived draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
};

struct TrainConfig {
    double learning_rate = 5e-5;
    double lr_decay = 0.95;
    int decay_every = 4;
    std::size_t batch_size = 16;
    double dropout = 0.5;
    int epochs = 20;
    std::uint64_t seed = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t hidden = 256;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;

    void validate() const;
    /// Stable digest of every field.
    std::uint64_t digest() const;
};

/// Learning rate in effect after `completed_epochs` epochs.
double learning_rate_after(const TrainConfig& cfg, int completed_epochs);

struct MlpParams {
    std::size_t d = 0;  ///< pooled embedding width; the input is 2d
    std::size_t h = 0;
    std::vector<double> w1;  ///< (2d x h), row-major: w1[i * h + j]
    std::vector<double> b1;
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    std::vector<double> w2;  ///< (h)
    double b2 = 0.0;

    /// Glorot-uniform weights, zero biases, gamma = 1, beta = 0, running
    /// mean 0 and variance 1.
    static MlpParams init(std::size_t d, std::size_t h, Rng& rng);

    std::size_t input_dim() const { return 2 * d; }
    bool all_finite() const;
    bool operator==(const MlpParams&) const = default;
};

struct Prediction {
    double probability = 0.5;
    QualityLabel label = QualityLabel::Successful;
};

Prediction make_prediction(double p);

/// Mean over rows.
std::vector<double> pool(const TokenMatrix& m);

/// Concatenation of the two pooled vectors.
std::vector<double> concat(std::span<const double> ar, std::span<const double> ac);

/// Eval-mode forward pass: running statistics, no dropout.
Prediction forward_eval(std::span<const double> ar, std::span<const double> ac, const MlpParams& params);

double bce_loss(double p, QualityLabel label);

/// Row-major batch of concatenated inputs.
struct Batch {
    std::size_t size = 0;
    std::size_t width = 0;
    std::vector<double> x;
    std::vector<QualityLabel> labels;
};

/// Activations cached by a training-mode forward pass.
struct TrainForward {
    std::size_t batch = 0;
    std::vector<double> xhat;     ///< (B x h) normalized pre-activations
    std::vector<double> y;        ///< (B x h) after scale and shift
    std::vector<double> mask;     ///< (B x h) dropout multipliers
    std::vector<double> a;        ///< (B x h) after relu and dropout
    std::vector<double> mean, var, inv_std;  ///< (h) batch statistics (biased var)
    std::vector<double> p;        ///< (B)
    double loss = 0.0;            ///< mean BCE
};

/// Training-mode forward pass with batch statistics. Dropout masks are drawn
/// from `rng` when `dropout > 0`. Throws NumericError naming the layer on a
/// non-finite value.
TrainForward forward_train(const Batch& batch, const MlpParams& params, double dropout, Rng& rng,
                           double bn_epsilon = 1e-5);

/// Mean batch loss with batch statistics and no dropout.
double batch_loss(const Batch& batch, const MlpParams& params, double bn_epsilon = 1e-5);

struct Gradients {
    std::vector<double> w1, b1, gamma, beta, w2;
    double b2 = 0.0;
};

/// Exact gradients of the mean batch loss of `fwd`.
Gradients backward(const Batch& batch, const TrainForward& fwd, const MlpParams& params);

/// Blends batch statistics into the running statistics (unbiased variance).
void update_running_stats(MlpParams& params, const TrainForward& fwd, double momentum);

class AdamState {
public:
    explicit AdamState(const MlpParams& shape);
    void step(MlpParams& params, const Gradients& g, double lr, const TrainConfig& cfg);
    long long steps() const { return t_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    Moments w1_, b1_, gamma_, beta_, w2_, b2_;
    long long t_ = 0;
};

struct Example {
    std::vector<double> ar;
    std::vector<double> ac;
    QualityLabel label = QualityLabel::Unsuccessful;
};

/// Pooled embeddings for every pair; each distinct text is embedded once.
std::vector<Example> featurize(const std::vector<ArPair>& pairs, Embedder& embedder);

struct EpochLog {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double dev_macro_f1 = 0.0;
};

struct TrainResult {
    MlpParams params;
    int best_epoch = -1;
    double best_dev_macro_f1 = -1.0;
    std::vector<EpochLog> history;
};

TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& dev_set, const TrainConfig& cfg);

/// Embeds then trains; returns the selected parameters.
MlpParams train(const std::vector<ArPair>& pairs, const std::vector<ArPair>& dev, const TrainConfig& cfg,
                Embedder& embedder);

std::vector<Prediction> predict(const std::vector<Example>& examples, const MlpParams& params);

/// Versioned little-endian checkpoint:
///   "ARQMLP\0\0" u32 version u32 reserved u64 d u64 h u64 cfg_digest
///   f64 arrays: w1, b1, gamma, beta, running_mean, running_var, w2, b2
void save_checkpoint(const std::filesystem::path& path, const MlpParams& params, std::uint64_t cfg_digest);

struct Checkpoint {
    MlpParams params;
    std::uint64_t cfg_digest = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace arq
