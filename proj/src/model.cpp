#include "arq/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "arq/error.hpp"
#include "arq/eval.hpp"
#include "arq/hash.hpp"
#include "arq/pairs.hpp"
#include "jsonl.hpp"

namespace arq {

namespace {

constexpr double kProbFloor = 1e-7;
constexpr double kProbCeil = 1.0 - 1e-7;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void require_finite(std::span<const double> v, const char* layer) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + layer);
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("lr decay must be in (0, 1]");
    if (decay_every < 1) throw ConfigError("decay interval must be at least 1");
    if (batch_size < 2) throw ConfigError("batch size must be at least 2");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must be in [0, 1)");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
        throw ConfigError("Adam betas must be in [0, 1)");
    if (!(adam_epsilon > 0)) throw ConfigError("Adam epsilon must be positive");
    if (hidden == 0) throw ConfigError("hidden width must be positive");
    if (!(bn_momentum > 0 && bn_momentum <= 1)) throw ConfigError("batchnorm momentum must be in (0, 1]");
    if (!(bn_epsilon > 0)) throw ConfigError("batchnorm epsilon must be positive");
}

std::uint64_t TrainConfig::digest() const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "lr=%.17g;decay=%.17g;every=%d;bs=%zu;drop=%.17g;ep=%d;seed=%llu;b1=%.17g;"
                                   "b2=%.17g;eps=%.17g;h=%zu;mom=%.17g;bneps=%.17g",
                  learning_rate, lr_decay, decay_every, batch_size, dropout, epochs,
                  static_cast<unsigned long long>(seed), adam_beta1, adam_beta2, adam_epsilon, hidden, bn_momentum,
                  bn_epsilon);
    return fnv1a64(buf);
}

double learning_rate_after(const TrainConfig& cfg, int completed_epochs) {
    if (completed_epochs < 0) throw ContractError("negative epoch count");
    return cfg.learning_rate * std::pow(cfg.lr_decay, completed_epochs / cfg.decay_every);
}

MlpParams MlpParams::init(std::size_t d, std::size_t h, Rng& rng) {
    if (d == 0 || h == 0) throw ConfigError("model dimensions must be positive");
    MlpParams p;
    p.d = d;
    p.h = h;
    const std::size_t in = 2 * d;
    p.w1.resize(in * h);
    const double l1 = glorot_limit(in, h);
    for (auto& w : p.w1) w = rng.uniform(-l1, l1);
    p.b1.assign(h, 0.0);
    p.gamma.assign(h, 1.0);
    p.beta.assign(h, 0.0);
    p.running_mean.assign(h, 0.0);
    p.running_var.assign(h, 1.0);
    p.w2.resize(h);
    const double l2 = glorot_limit(h, 1);
    for (auto& w : p.w2) w = rng.uniform(-l2, l2);
    p.b2 = 0.0;
    return p;
}

bool MlpParams::all_finite() const {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(w1) && ok(b1) && ok(gamma) && ok(beta) && ok(running_mean) && ok(running_var) && ok(w2) &&
           std::isfinite(b2);
}

Prediction make_prediction(double p) {
    return {p, p >= 0.5 ? QualityLabel::Successful : QualityLabel::Unsuccessful};
}

std::vector<double> pool(const TokenMatrix& m) {
    if (m.rows() == 0) throw ContractError("cannot pool an empty token matrix");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
    }
    const double n = static_cast<double>(m.rows());
    for (auto& v : out) v /= n;
    return out;
}

std::vector<double> concat(std::span<const double> ar, std::span<const double> ac) {
    std::vector<double> x(ar.begin(), ar.end());
    x.insert(x.end(), ac.begin(), ac.end());
    return x;
}

Prediction forward_eval(std::span<const double> ar, std::span<const double> ac, const MlpParams& params) {
    if (ar.size() != params.d || ac.size() != params.d)
        throw ContractError("input width " + std::to_string(ar.size()) + "+" + std::to_string(ac.size()) +
                            " does not match model width " + std::to_string(params.d));
    const std::size_t h = params.h;
    std::vector<double> z(params.b1);
    auto accumulate = [&](std::span<const double> part, std::size_t offset) {
        for (std::size_t i = 0; i < part.size(); ++i) {
            const double xi = part[i];
            const double* w = params.w1.data() + (offset + i) * h;
            for (std::size_t j = 0; j < h; ++j) z[j] += xi * w[j];
        }
    };
    accumulate(ar, 0);
    accumulate(ac, params.d);
    require_finite(z, "linear1");
    double logit = params.b2;
    for (std::size_t j = 0; j < h; ++j) {
        // Eval mode uses the default epsilon; it is not stored per model.
        double y = params.gamma[j] * (z[j] - params.running_mean[j]) / std::sqrt(params.running_var[j] + 1e-5) +
                   params.beta[j];
        if (!std::isfinite(y)) throw NumericError("non-finite value in batchnorm");
        logit += params.w2[j] * std::max(0.0, y);
    }
    if (!std::isfinite(logit)) throw NumericError("non-finite value in linear2");
    return make_prediction(sigmoid(logit));
}

double bce_loss(double p, QualityLabel label) {
    const double pc = std::clamp(p, kProbFloor, kProbCeil);
    return label == QualityLabel::Successful ? -std::log(pc) : -std::log(1.0 - pc);
}

TrainForward forward_train(const Batch& batch, const MlpParams& params, double dropout, Rng& rng,
                           double bn_epsilon) {
    const std::size_t B = batch.size, D = batch.width, h = params.h;
    if (B < 2) throw ContractError("training batch needs at least two examples");
    if (D != params.input_dim()) throw ContractError("batch width does not match model input");
    if (batch.x.size() != B * D || batch.labels.size() != B) throw ContractError("malformed batch");

    TrainForward f;
    f.batch = B;
    std::vector<double> z(B * h);
    for (std::size_t b = 0; b < B; ++b) {
        double* zb = z.data() + b * h;
        std::copy(params.b1.begin(), params.b1.end(), zb);
        const double* xb = batch.x.data() + b * D;
        for (std::size_t i = 0; i < D; ++i) {
            const double xi = xb[i];
            if (xi == 0.0) continue;
            const double* w = params.w1.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) zb[j] += xi * w[j];
        }
    }
    require_finite(z, "linear1");

    f.mean.assign(h, 0.0);
    f.var.assign(h, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < h; ++j) f.mean[j] += z[b * h + j];
    for (auto& m : f.mean) m /= static_cast<double>(B);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < h; ++j) {
            const double c = z[b * h + j] - f.mean[j];
            f.var[j] += c * c;
        }
    for (auto& v : f.var) v /= static_cast<double>(B);
    f.inv_std.resize(h);
    for (std::size_t j = 0; j < h; ++j) f.inv_std[j] = 1.0 / std::sqrt(f.var[j] + bn_epsilon);

    f.xhat.resize(B * h);
    f.y.resize(B * h);
    f.mask.assign(B * h, 1.0);
    f.a.resize(B * h);
    if (dropout > 0) {
        const double keep = 1.0 - dropout;
        for (auto& m : f.mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < h; ++j) {
            const std::size_t k = b * h + j;
            f.xhat[k] = (z[k] - f.mean[j]) * f.inv_std[j];
            f.y[k] = params.gamma[j] * f.xhat[k] + params.beta[j];
            f.a[k] = std::max(0.0, f.y[k]) * f.mask[k];
        }
    require_finite(f.y, "batchnorm");

    f.p.resize(B);
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        double logit = params.b2;
        const double* ab = f.a.data() + b * h;
        for (std::size_t j = 0; j < h; ++j) logit += params.w2[j] * ab[j];
        if (!std::isfinite(logit)) throw NumericError("non-finite value in linear2");
        f.p[b] = sigmoid(logit);
        total += bce_loss(f.p[b], batch.labels[b]);
    }
    f.loss = total / static_cast<double>(B);
    return f;
}

double batch_loss(const Batch& batch, const MlpParams& params, double bn_epsilon) {
    Rng unused(0);
    return forward_train(batch, params, 0.0, unused, bn_epsilon).loss;
}

Gradients backward(const Batch& batch, const TrainForward& f, const MlpParams& params) {
    const std::size_t B = f.batch, D = batch.width, h = params.h;
    const double invB = 1.0 / static_cast<double>(B);
    Gradients g;
    g.w1.assign(D * h, 0.0);
    g.b1.assign(h, 0.0);
    g.gamma.assign(h, 0.0);
    g.beta.assign(h, 0.0);
    g.w2.assign(h, 0.0);

    std::vector<double> dy(B * h);
    for (std::size_t b = 0; b < B; ++b) {
        const double p = f.p[b];
        const double target = batch.labels[b] == QualityLabel::Successful ? 1.0 : 0.0;
        // The clamp flattens the loss outside [floor, ceil].
        const double dlogit = (p < kProbFloor || p > kProbCeil) ? 0.0 : (p - target) * invB;
        g.b2 += dlogit;
        for (std::size_t j = 0; j < h; ++j) {
            const std::size_t k = b * h + j;
            g.w2[j] += dlogit * f.a[k];
            dy[k] = f.y[k] > 0.0 ? dlogit * params.w2[j] * f.mask[k] : 0.0;
        }
    }

    std::vector<double> sum_dxhat(h, 0.0), sum_dxhat_xhat(h, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < h; ++j) {
            const std::size_t k = b * h + j;
            g.gamma[j] += dy[k] * f.xhat[k];
            g.beta[j] += dy[k];
            const double dxhat = dy[k] * params.gamma[j];
            sum_dxhat[j] += dxhat;
            sum_dxhat_xhat[j] += dxhat * f.xhat[k];
        }

    std::vector<double> dz(B * h);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < h; ++j) {
            const std::size_t k = b * h + j;
            const double dxhat = dy[k] * params.gamma[j];
            dz[k] = invB * f.inv_std[j] *
                    (static_cast<double>(B) * dxhat - sum_dxhat[j] - f.xhat[k] * sum_dxhat_xhat[j]);
            g.b1[j] += dz[k];
        }

    for (std::size_t b = 0; b < B; ++b) {
        const double* xb = batch.x.data() + b * D;
        const double* dzb = dz.data() + b * h;
        for (std::size_t i = 0; i < D; ++i) {
            const double xi = xb[i];
            if (xi == 0.0) continue;
            double* gw = g.w1.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) gw[j] += xi * dzb[j];
        }
    }
    return g;
}

void update_running_stats(MlpParams& params, const TrainForward& f, double momentum) {
    const double B = static_cast<double>(f.batch);
    for (std::size_t j = 0; j < params.h; ++j) {
        params.running_mean[j] = (1 - momentum) * params.running_mean[j] + momentum * f.mean[j];
        params.running_var[j] = (1 - momentum) * params.running_var[j] + momentum * f.var[j] * B / (B - 1);
    }
}

AdamState::AdamState(const MlpParams& p) {
    auto zeros = [](std::size_t n) { return Moments{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; };
    w1_ = zeros(p.w1.size());
    b1_ = zeros(p.h);
    gamma_ = zeros(p.h);
    beta_ = zeros(p.h);
    w2_ = zeros(p.h);
    b2_ = zeros(1);
}

void AdamState::step(MlpParams& params, const Gradients& g, double lr, const TrainConfig& cfg) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
    auto apply = [&](std::vector<double>& theta, const std::vector<double>& grad, Moments& mo) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            mo.m[i] = cfg.adam_beta1 * mo.m[i] + (1 - cfg.adam_beta1) * grad[i];
            mo.v[i] = cfg.adam_beta2 * mo.v[i] + (1 - cfg.adam_beta2) * grad[i] * grad[i];
            theta[i] -= lr * (mo.m[i] / c1) / (std::sqrt(mo.v[i] / c2) + cfg.adam_epsilon);
        }
    };
    apply(params.w1, g.w1, w1_);
    apply(params.b1, g.b1, b1_);
    apply(params.gamma, g.gamma, gamma_);
    apply(params.beta, g.beta, beta_);
    apply(params.w2, g.w2, w2_);
    std::vector<double> b2{params.b2};
    apply(b2, {g.b2}, b2_);
    params.b2 = b2[0];
}

std::vector<Example> featurize(const std::vector<ArPair>& pairs, Embedder& embedder) {
    std::map<std::string, std::size_t> slot;
    std::vector<std::string> texts;
    for (const auto& p : pairs)
        for (const auto* t : {&p.ar_text, &p.ac_text})
            if (slot.emplace(*t, texts.size()).second) texts.push_back(*t);
    auto mats = embedder.embed_batch(texts);
    std::vector<std::vector<double>> pooled;
    pooled.reserve(mats.size());
    for (const auto& m : mats) pooled.push_back(pool(m));

    std::vector<Example> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back({pooled[slot.at(p.ar_text)], pooled[slot.at(p.ac_text)], p.label});
    return out;
}

std::vector<Prediction> predict(const std::vector<Example>& examples, const MlpParams& params) {
    std::vector<Prediction> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(forward_eval(e.ar, e.ac, params));
    return out;
}

namespace {

double dev_macro_f1(const std::vector<Example>& dev, const MlpParams& params) {
    std::vector<QualityLabel> golds, preds;
    for (const auto& e : dev) {
        golds.push_back(e.label);
        preds.push_back(forward_eval(e.ar, e.ac, params).label);
    }
    return macro_prf(preds, golds).f1;
}

}  // namespace

TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.size() < 2) throw ValidationError("training needs at least two examples");
    if (dev_set.empty()) throw ConfigError("training needs a non-empty dev set");
    const std::size_t d = train_set.front().ar.size();
    for (const auto* set : {&train_set, &dev_set})
        for (const auto& e : *set)
            if (e.ar.size() != d || e.ac.size() != d) throw ContractError("examples have mixed embedding widths");

    Rng rng(cfg.seed);
    TrainResult result;
    MlpParams params = MlpParams::init(d, cfg.hidden, rng);
    AdamState adam(params);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Batch batch;
    batch.width = 2 * d;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = learning_rate_after(cfg, epoch);
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            if (end - start < 2) break;  // batch statistics need two rows
            batch.size = end - start;
            batch.x.clear();
            batch.labels.clear();
            for (std::size_t k = start; k < end; ++k) {
                const auto& e = train_set[order[k]];
                batch.x.insert(batch.x.end(), e.ar.begin(), e.ar.end());
                batch.x.insert(batch.x.end(), e.ac.begin(), e.ac.end());
                batch.labels.push_back(e.label);
            }
            auto fwd = forward_train(batch, params, cfg.dropout, rng, cfg.bn_epsilon);
            auto grads = backward(batch, fwd, params);
            update_running_stats(params, fwd, cfg.bn_momentum);
            adam.step(params, grads, lr, cfg);
            loss_sum += fwd.loss * static_cast<double>(batch.size);
            loss_n += batch.size;
        }
        if (!params.all_finite())
            throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));
        const double f1 = dev_macro_f1(dev_set, params);
        result.history.push_back({epoch, lr, loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0, f1});
        if (f1 > result.best_dev_macro_f1) {
            result.best_dev_macro_f1 = f1;
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    return result;
}

MlpParams train(const std::vector<ArPair>& pairs, const std::vector<ArPair>& dev, const TrainConfig& cfg,
                Embedder& embedder) {
    return train(featurize(pairs, embedder), featurize(dev, embedder), cfg).params;
}

namespace {

constexpr char kMagic[8] = {'A', 'R', 'Q', 'M', 'L', 'P', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64s(std::string& out, const std::vector<double>& v) {
    for (double x : v) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
    std::uint64_t u(int width) {
        if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw ValidationError("checkpoint is truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::vector<double> f64s(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = std::bit_cast<double>(u(8));
        return v;
    }
    std::string_view take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw ValidationError("checkpoint is truncated");
        auto s = std::string_view(bytes_).substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MlpParams& p, std::uint64_t cfg_digest) {
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u32(out, 0);
    put_u64(out, p.d);
    put_u64(out, p.h);
    put_u64(out, cfg_digest);
    for (const auto* v : {&p.w1, &p.b1, &p.gamma, &p.beta, &p.running_mean, &p.running_var, &p.w2}) put_f64s(out, *v);
    put_f64s(out, {p.b2});
    detail::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    Reader r(ss.str());
    if (r.take(8) != std::string_view(kMagic, 8)) throw ValidationError("not a model checkpoint: " + path.string());
    if (auto v = r.u(4); v != kVersion)
        throw ValidationError("unsupported checkpoint version " + std::to_string(v));
    r.u(4);
    Checkpoint c;
    auto& p = c.params;
    p.d = r.u(8);
    p.h = r.u(8);
    c.cfg_digest = r.u(8);
    if (p.d == 0 || p.h == 0 || p.d > (1u << 20) || p.h > (1u << 20))
        throw ValidationError("checkpoint has implausible dimensions");
    p.w1 = r.f64s(2 * p.d * p.h);
    p.b1 = r.f64s(p.h);
    p.gamma = r.f64s(p.h);
    p.beta = r.f64s(p.h);
    p.running_mean = r.f64s(p.h);
    p.running_var = r.f64s(p.h);
    p.w2 = r.f64s(p.h);
    p.b2 = r.f64s(1)[0];
    if (!r.done()) throw ValidationError("checkpoint has trailing bytes");
    if (!p.all_finite()) throw NumericError("checkpoint holds non-finite parameters");
    return c;
}

}  // namespace arq
