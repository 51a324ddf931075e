#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "arq/embed.hpp"
#include "arq/error.hpp"
#include "arq/eval.hpp"
#include "arq/model.hpp"
#include "arq/pairs.hpp"
#include "support.hpp"

using namespace arq;

namespace {

Batch random_batch(std::size_t B, std::size_t d, Rng& rng) {
    Batch b;
    b.size = B;
    b.width = 2 * d;
    for (std::size_t i = 0; i < B * 2 * d; ++i) b.x.push_back(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < B; ++i)
        b.labels.push_back(i % 2 ? QualityLabel::Successful : QualityLabel::Unsuccessful);
    return b;
}

/// Linearly separable toy set: the AR vector's first coordinate carries the label.
std::vector<Example> separable(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i) {
        Example e;
        e.label = i % 2 ? QualityLabel::Successful : QualityLabel::Unsuccessful;
        for (std::size_t k = 0; k < d; ++k) {
            e.ar.push_back(rng.uniform(-0.2, 0.2));
            e.ac.push_back(rng.uniform(-0.2, 0.2));
        }
        e.ar[0] += e.label == QualityLabel::Successful ? 1.0 : -1.0;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

TEST(Pool, MeanOverRows) {
    TokenMatrix m(2, 2);
    m(0, 0) = 1;
    m(0, 1) = 3;
    m(1, 0) = 3;
    m(1, 1) = 1;
    EXPECT_EQ(pool(m), (std::vector<double>{2, 2}));
    EXPECT_THROW(pool(TokenMatrix(0, 2)), ContractError);
    std::vector<double> a{1, 2}, b{3};
    EXPECT_EQ(concat(a, b), (std::vector<double>{1, 2, 3}));
}

TEST(Loss, ClampedBinaryCrossEntropy) {
    EXPECT_NEAR(bce_loss(0.5, QualityLabel::Successful), std::log(2.0), 1e-15);
    EXPECT_NEAR(bce_loss(0.9, QualityLabel::Unsuccessful), 2.302585092994046, 1e-12);
    EXPECT_NEAR(bce_loss(1.0, QualityLabel::Unsuccessful), -std::log(1e-7), 1e-9);
    EXPECT_NEAR(bce_loss(0.0, QualityLabel::Unsuccessful), -std::log1p(-1e-7), 1e-15);
}

TEST(Prediction, ThresholdAtOneHalf) {
    EXPECT_EQ(make_prediction(0.5).label, QualityLabel::Successful);
    EXPECT_EQ(make_prediction(0.4999999).label, QualityLabel::Unsuccessful);
    EXPECT_EQ(make_prediction(0.8).probability, 0.8);
}

TEST(Schedule, StepDecay) {
    TrainConfig cfg;
    EXPECT_DOUBLE_EQ(learning_rate_after(cfg, 0), 5e-5);
    EXPECT_DOUBLE_EQ(learning_rate_after(cfg, 3), 5e-5);
    EXPECT_DOUBLE_EQ(learning_rate_after(cfg, 4), 4.75e-5);
    EXPECT_NEAR(learning_rate_after(cfg, 8), 4.5125e-5, 1e-18);
    EXPECT_THROW(learning_rate_after(cfg, -1), ContractError);
}

TEST(TrainConfig, Validation) {
    TrainConfig ok;
    EXPECT_NO_THROW(ok.validate());
    auto bad = ok;
    bad.batch_size = 1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = ok;
    bad.dropout = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = ok;
    bad.learning_rate = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = ok;
    bad.epochs = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    auto other = ok;
    other.seed = 2;
    EXPECT_NE(ok.digest(), other.digest());
    EXPECT_EQ(ok.digest(), TrainConfig{}.digest());
}

TEST(Forward, ZeroOutputLayerGivesOneHalf) {
    Rng rng(3);
    auto p = MlpParams::init(4, 6, rng);
    std::fill(p.w2.begin(), p.w2.end(), 0.0);
    p.b2 = 0.0;
    std::vector<double> ar(4, 0.3), ac(4, -0.7);
    EXPECT_EQ(forward_eval(ar, ac, p).probability, 0.5);
}

TEST(Forward, HandComputedEvalPass) {
    MlpParams p;
    p.d = 1;
    p.h = 1;
    p.w1 = {0.5, -1.0};
    p.b1 = {0.25};
    p.gamma = {2.0};
    p.beta = {0.1};
    p.running_mean = {0.05};
    p.running_var = {0.5};
    p.w2 = {1.5};
    p.b2 = -0.2;
    const double z = 0.5 * 1.0 + -1.0 * 0.4 + 0.25;
    const double y = 2.0 * (z - 0.05) / std::sqrt(0.5 + 1e-5) + 0.1;
    const double logit = 1.5 * std::max(0.0, y) - 0.2;
    std::vector<double> ar{1.0}, ac{0.4};
    EXPECT_NEAR(forward_eval(ar, ac, p).probability, 1 / (1 + std::exp(-logit)), 1e-15);
    std::vector<double> wrong{1.0, 2.0};
    EXPECT_THROW(forward_eval(wrong, ac, p), ContractError);
    std::vector<double> nan{std::nan("")};
    try {
        forward_eval(nan, ac, p);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("linear1"), std::string::npos);
    }
}

TEST(Forward, TrainingModeUsesBatchStatistics) {
    Rng rng(9);
    auto p = MlpParams::init(2, 3, rng);
    auto b = random_batch(5, 2, rng);
    Rng unused(0);
    auto f = forward_train(b, p, 0.0, unused);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0, sq = 0;
        for (std::size_t i = 0; i < 5; ++i) mean += f.xhat[i * 3 + j];
        for (std::size_t i = 0; i < 5; ++i) sq += f.xhat[i * 3 + j] * f.xhat[i * 3 + j];
        EXPECT_NEAR(mean / 5, 0.0, 1e-12);
        EXPECT_NEAR(sq / 5, f.var[j] / (f.var[j] + 1e-5), 1e-9);
    }
    EXPECT_NEAR(f.loss, batch_loss(b, p), 1e-15);
    Batch single = b;
    single.size = 1;
    single.x.resize(4);
    single.labels.resize(1);
    EXPECT_THROW(forward_train(single, p, 0.0, unused), ContractError);
}

TEST(Forward, DropoutIsInvertedAndSeeded) {
    Rng init(4);
    auto p = MlpParams::init(3, 32, init);
    auto b = random_batch(8, 3, init);
    Rng r1(77), r2(77);
    auto f1 = forward_train(b, p, 0.5, r1);
    auto f2 = forward_train(b, p, 0.5, r2);
    EXPECT_EQ(f1.mask, f2.mask);
    std::size_t zeros = 0;
    for (double m : f1.mask) {
        EXPECT_TRUE(m == 0.0 || m == 2.0);
        zeros += m == 0.0;
    }
    EXPECT_GT(zeros, 0u);
    EXPECT_LT(zeros, f1.mask.size());
}

TEST(Backward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto r = arq::testing::gradient_check(seed);
        EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " worst tensor " << r.worst_tensor;
        EXPECT_GT(r.checked, 0u);
    }
}

TEST(Backward, HiddenBiasHasNoGradientUnderBatchNorm) {
    Rng rng(12);
    auto p = MlpParams::init(3, 5, rng);
    auto b = random_batch(6, 3, rng);
    Rng unused(0);
    auto g = backward(b, forward_train(b, p, 0.0, unused), p);
    for (double v : g.b1) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Backward, DuplicatingTheBatchChangesNothing) {
    Rng rng(21);
    auto p = MlpParams::init(3, 4, rng);
    auto b = random_batch(5, 3, rng);
    Batch twice = b;
    twice.size = 10;
    twice.x.insert(twice.x.end(), b.x.begin(), b.x.end());
    twice.labels.insert(twice.labels.end(), b.labels.begin(), b.labels.end());
    Rng u1(0), u2(0);
    auto f1 = forward_train(b, p, 0.0, u1);
    auto f2 = forward_train(twice, p, 0.0, u2);
    EXPECT_NEAR(f1.loss, f2.loss, 1e-12);
    auto g1 = backward(b, f1, p);
    auto g2 = backward(twice, f2, p);
    for (std::size_t i = 0; i < g1.w1.size(); ++i) EXPECT_NEAR(g1.w1[i], g2.w1[i], 1e-12);
    for (std::size_t i = 0; i < g1.gamma.size(); ++i) EXPECT_NEAR(g1.gamma[i], g2.gamma[i], 1e-12);
    EXPECT_NEAR(g1.b2, g2.b2, 1e-12);
}

TEST(Backward, SaturatedOutputsHaveZeroGradient) {
    Rng rng(8);
    auto p = MlpParams::init(2, 3, rng);
    p.b2 = 60.0;  // sigmoid rounds to 1, beyond the clamp
    auto b = random_batch(4, 2, rng);
    Rng unused(0);
    auto f = forward_train(b, p, 0.0, unused);
    auto g = backward(b, f, p);
    EXPECT_EQ(g.b2, 0.0);
    for (double v : g.w1) EXPECT_EQ(v, 0.0);
    for (double v : g.w2) EXPECT_EQ(v, 0.0);
}

TEST(RunningStats, UnbiasedVarianceBlend) {
    Rng rng(2);
    auto p = MlpParams::init(1, 2, rng);
    auto b = random_batch(4, 1, rng);
    Rng unused(0);
    auto f = forward_train(b, p, 0.0, unused);
    update_running_stats(p, f, 0.1);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(p.running_mean[j], 0.1 * f.mean[j], 1e-15);
        EXPECT_NEAR(p.running_var[j], 0.9 + 0.1 * f.var[j] * 4.0 / 3.0, 1e-15);
    }
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Rng rng(5);
    auto p = MlpParams::init(1, 2, rng);
    const auto before = p;
    Gradients g{std::vector<double>(4, 0.3), std::vector<double>(2, -2.0), std::vector<double>(2, 1e-3),
                std::vector<double>(2, 0.0), std::vector<double>(2, -0.5), 4.0};
    AdamState adam(p);
    TrainConfig cfg;
    adam.step(p, g, 0.01, cfg);
    EXPECT_EQ(adam.steps(), 1);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p.w1[i], before.w1[i] - 0.01, 1e-9);
    EXPECT_NEAR(p.b1[0], before.b1[0] + 0.01, 1e-9);
    EXPECT_NEAR(p.gamma[0], before.gamma[0] - 0.01, 2e-7);
    EXPECT_EQ(p.beta[0], before.beta[0]);
    EXPECT_NEAR(p.b2, before.b2 - 0.01, 1e-9);
}

TEST(Train, LearnsASeparableSet) {
    TrainConfig cfg;
    cfg.hidden = 16;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 15;
    cfg.dropout = 0.1;
    auto result = train(separable(96, 4, 1), separable(32, 4, 2), cfg);
    EXPECT_GE(result.best_dev_macro_f1, 0.95);
    ASSERT_EQ(result.history.size(), 15u);
    EXPECT_LT(result.history.back().train_loss, result.history.front().train_loss);
    const auto test = separable(40, 4, 3);
    auto preds = predict(test, result.params);
    std::vector<QualityLabel> p, gold;
    for (std::size_t i = 0; i < test.size(); ++i) {
        p.push_back(preds[i].label);
        gold.push_back(test[i].label);
    }
    EXPECT_GE(macro_prf(p, gold).f1, 0.95);
}

TEST(Train, DeterministicAndSelectsEarliestBestEpoch) {
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 6;
    auto a = train(separable(40, 3, 4), separable(10, 3, 5), cfg);
    auto b = train(separable(40, 3, 4), separable(10, 3, 5), cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.best_epoch, b.best_epoch);
    for (const auto& h : a.history) {
        if (h.epoch < a.best_epoch) EXPECT_LT(h.dev_macro_f1, a.best_dev_macro_f1);
        EXPECT_LE(h.dev_macro_f1, a.best_dev_macro_f1);
    }
    cfg.seed = 99;
    auto c = train(separable(40, 3, 4), separable(10, 3, 5), cfg);
    EXPECT_NE(a.params.w1, c.params.w1);
}

TEST(Train, RejectsDegenerateInputs) {
    TrainConfig cfg;
    EXPECT_THROW(train(separable(10, 2, 1), {}, cfg), ConfigError);
    EXPECT_THROW(train(separable(1, 2, 1), separable(4, 2, 1), cfg), ValidationError);
    auto mixed = separable(4, 2, 1);
    mixed[1].ac.push_back(0.0);
    EXPECT_THROW(train(mixed, separable(4, 2, 1), cfg), ContractError);
}

TEST(Featurize, PoolsEachText) {
    HashEmbedder e(6);
    std::vector<ArPair> pairs{{"e", 0, "Some text.", "", ContextKind::BaseShort, std::nullopt, QualityLabel::Successful}};
    auto ex = featurize(pairs, e);
    ASSERT_EQ(ex.size(), 1u);
    EXPECT_EQ(ex[0].ar, pool(e.embed("Some text.")));
    EXPECT_EQ(ex[0].ac, pool(e.embed("")));
    EXPECT_EQ(ex[0].label, QualityLabel::Successful);
}

TEST(Checkpoint, RoundTripAndCorruption) {
    Rng rng(6);
    auto p = MlpParams::init(3, 4, rng);
    p.running_var[1] = 0.123456789012345;
    const auto dir = arq::testing::scratch_dir("ckpt");
    const auto path = dir / "m.ckpt";
    save_checkpoint(path, p, 0xfeedULL);
    auto back = load_checkpoint(path);
    EXPECT_EQ(back.params, p);
    EXPECT_EQ(back.cfg_digest, 0xfeedULL);

    const auto size = std::filesystem::file_size(path);
    EXPECT_EQ(size, 8u + 4 + 4 + 8 * 3 + 8 * (p.w1.size() + 6 * p.h + 1));
    std::filesystem::copy_file(path, dir / "short.ckpt");
    std::filesystem::resize_file(dir / "short.ckpt", size - 3);
    EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), ValidationError);
    {
        std::ofstream out(path, std::ios::app | std::ios::binary);
        out << "x";
    }
    EXPECT_THROW(load_checkpoint(path), ValidationError);
    std::ofstream(dir / "junk.ckpt") << "not a checkpoint at all, really";
    EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), ValidationError);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), ConfigError);
}
