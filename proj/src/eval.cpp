#include "arq/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "arq/error.hpp"
#include "arq/hash.hpp"
#include "arq/pairs.hpp"
#include "arq/revision.hpp"
#include "jsonl.hpp"

namespace arq {

using detail::json;

std::vector<FoldSplit> kfold_split(const std::vector<ArPair>& pairs, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be at least 2");
    std::map<std::string, std::vector<std::size_t>> by_essay;
    for (std::size_t i = 0; i < pairs.size(); ++i) by_essay[pairs[i].essay_id].push_back(i);
    if (by_essay.size() < static_cast<std::size_t>(k))
        throw ConfigError("need at least " + std::to_string(k) + " essays for " + std::to_string(k) +
                          "-fold splitting, have " + std::to_string(by_essay.size()));

    std::vector<std::string> successful, unsuccessful;
    for (const auto& [essay, idx] : by_essay) {
        std::size_t pos = 0;
        for (auto i : idx) pos += pairs[i].label == QualityLabel::Successful;
        (2 * pos >= idx.size() ? successful : unsuccessful).push_back(essay);
    }
    Rng rng(seed);
    rng.shuffle(successful);
    rng.shuffle(unsuccessful);
    std::vector<std::string> dealt = successful;
    dealt.insert(dealt.end(), unsuccessful.begin(), unsuccessful.end());

    std::vector<int> fold_of(dealt.size());
    for (std::size_t i = 0; i < dealt.size(); ++i) fold_of[i] = static_cast<int>(i % static_cast<std::size_t>(k));

    auto collect = [&](const std::vector<std::string>& essays) {
        std::vector<std::size_t> out;
        for (const auto& e : essays) {
            const auto& idx = by_essay.at(e);
            out.insert(out.end(), idx.begin(), idx.end());
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    std::vector<FoldSplit> folds;
    for (int f = 0; f < k; ++f) {
        std::vector<std::string> test, rest;
        for (std::size_t i = 0; i < dealt.size(); ++i) (fold_of[i] == f ? test : rest).push_back(dealt[i]);
        Rng dev_rng(seed + static_cast<std::uint64_t>(f));
        dev_rng.shuffle(rest);
        const auto n_dev = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(rest.size()))));
        std::vector<std::string> dev(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_dev));
        std::vector<std::string> train(rest.begin() + static_cast<std::ptrdiff_t>(n_dev), rest.end());
        folds.push_back({f, collect(train), collect(dev), collect(test)});
    }
    return folds;
}

PRF macro_prf(std::span<const QualityLabel> preds, std::span<const QualityLabel> golds) {
    if (preds.size() != golds.size())
        throw ContractError("prediction and gold lengths differ: " + std::to_string(preds.size()) + " vs " +
                            std::to_string(golds.size()));
    if (preds.empty()) throw ContractError("metrics need at least one prediction");
    PRF sum;
    for (auto cls : {QualityLabel::Successful, QualityLabel::Unsuccessful}) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const bool p = preds[i] == cls, g = golds[i] == cls;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
        }
        if (tp + fp + fn == 0) {
            sum.precision += 1;
            sum.recall += 1;
            sum.f1 += 1;
            continue;
        }
        const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum.precision += prec;
        sum.recall += rec;
        sum.f1 += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    }
    return {sum.precision / 2, sum.recall / 2, sum.f1 / 2};
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ContractError("paired samples differ in length: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    if (a.size() < 2) throw ContractError("paired t-test needs at least two pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    TTestResult r;
    r.n = n;
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) return r;

    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        r.t = mean > 0 ? INFINITY : -INFINITY;
        r.p = 0.0;
    } else {
        r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
        boost::math::students_t dist(static_cast<double>(n - 1));
        r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
    }
    r.significant = r.p < 0.05;
    return r;
}

double cohen_kappa(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size())
        throw ContractError("label sequences differ in length: " + std::to_string(x.size()) + " vs " +
                            std::to_string(y.size()));
    if (x.empty()) throw ContractError("kappa needs at least one label");
    const double n = static_cast<double>(x.size());
    std::map<int, double> fx, fy;
    double agree = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        fx[x[i]] += 1;
        fy[y[i]] += 1;
        agree += x[i] == y[i];
    }
    const double po = agree / n;
    double pe = 0;
    for (const auto& [label, c] : fx)
        if (auto it = fy.find(label); it != fy.end()) pe += (c / n) * (it->second / n);
    if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1 - pe);
}

std::string_view name(Scope s) {
    switch (s) {
        case Scope::All: return "reasoning_and_evidence";
        case Scope::Reasoning: return "reasoning";
        case Scope::Evidence: return "evidence";
    }
    return "reasoning_and_evidence";
}

std::string_view name(Metric m) {
    switch (m) {
        case Metric::Precision: return "precision";
        case Metric::Recall: return "recall";
        case Metric::F1: return "f1";
    }
    return "f1";
}

double metric_of(const PRF& prf, Metric m) {
    switch (m) {
        case Metric::Precision: return prf.precision;
        case Metric::Recall: return prf.recall;
        case Metric::F1: return prf.f1;
    }
    return prf.f1;
}

namespace {

constexpr Scope kScopes[] = {Scope::All, Scope::Reasoning, Scope::Evidence};
constexpr Metric kMetrics[] = {Metric::Precision, Metric::Recall, Metric::F1};
const Condition kBaseLong{ContextKind::BaseLong, std::nullopt};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

std::optional<PRF> FoldResult::scope(Scope s) const {
    switch (s) {
        case Scope::All: return all;
        case Scope::Reasoning: return reasoning;
        case Scope::Evidence: return evidence;
    }
    return all;
}

void ExperimentConfig::validate() const {
    if (conditions.empty()) throw ConfigError("no conditions to evaluate");
    std::set<Condition> seen(conditions.begin(), conditions.end());
    if (seen.size() != conditions.size()) throw ConfigError("duplicate condition");
    if (seeds.empty()) throw ConfigError("no seeds given");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("duplicate seed");
    if (k < 2) throw ConfigError("k must be at least 2");
    if (workers < 1) throw ConfigError("workers must be positive");
    train.validate();
}

void ExperimentReport::finalize() {
    aggregates_.clear();
    comparisons_.clear();
    auto rows_of = [&](const Condition& c) {
        std::vector<const FoldResult*> out;
        for (const auto& r : rows)
            if (r.condition == c) out.push_back(&r);
        return out;
    };
    for (const auto& c : conditions) {
        auto rs = rows_of(c);
        for (auto s : kScopes) {
            Aggregate agg{c, s, {}, 0};
            for (const auto* r : rs)
                if (auto prf = r->scope(s)) {
                    agg.mean.precision += prf->precision;
                    agg.mean.recall += prf->recall;
                    agg.mean.f1 += prf->f1;
                    ++agg.runs;
                }
            if (agg.runs == 0) continue;
            const double n = static_cast<double>(agg.runs);
            agg.mean = {agg.mean.precision / n, agg.mean.recall / n, agg.mean.f1 / n};
            aggregates_.push_back(agg);
        }
    }

    if (std::find(conditions.begin(), conditions.end(), kBaseLong) == conditions.end()) return;
    std::map<std::pair<std::uint64_t, int>, const FoldResult*> base;
    for (const auto* r : rows_of(kBaseLong)) base[{r->seed, r->fold}] = r;
    for (const auto& c : conditions) {
        if (c == kBaseLong) continue;
        for (auto s : kScopes)
            for (auto m : kMetrics) {
                std::vector<double> a, b;
                for (const auto* r : rows_of(c)) {
                    auto it = base.find({r->seed, r->fold});
                    if (it == base.end()) continue;
                    auto x = r->scope(s), y = it->second->scope(s);
                    if (!x || !y) continue;
                    a.push_back(metric_of(*x, m));
                    b.push_back(metric_of(*y, m));
                }
                if (a.size() < 2) continue;
                Comparison cmp{c, s, m, 0.0, paired_ttest(a, b)};
                for (std::size_t i = 0; i < a.size(); ++i) cmp.mean_difference += a[i] - b[i];
                cmp.mean_difference /= static_cast<double>(a.size());
                comparisons_.push_back(cmp);
            }
    }
}

const Aggregate* ExperimentReport::find(const Condition& c, Scope s) const {
    for (const auto& a : aggregates_)
        if (a.condition == c && a.scope == s) return &a;
    return nullptr;
}

const Comparison* ExperimentReport::find(const Condition& c, Scope s, Metric m) const {
    for (const auto& x : comparisons_)
        if (x.condition == c && x.scope == s && x.metric == m) return &x;
    return nullptr;
}

namespace {

json prf_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

json opt_prf_json(const std::optional<PRF>& p) { return p ? prf_json(*p) : json(nullptr); }

PRF prf_from(const json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

std::optional<PRF> opt_prf_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return prf_from(j);
}

// JSON has no infinities; the t statistic is written as a string then.
json number_json(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string ExperimentReport::to_json() const {
    json doc;
    doc["config_digest"] = hex64(config_digest);
    doc["seeds"] = seeds;
    doc["k"] = k;
    doc["shuffled_labels"] = shuffled_labels;
    json conds = json::array();
    for (const auto& c : conditions) conds.push_back(c.label());
    doc["conditions"] = conds;

    json rs = json::array();
    for (const auto& r : rows)
        rs.push_back({{"condition", r.condition.label()},
                      {"seed", r.seed},
                      {"fold", r.fold},
                      {"n_train", r.n_train},
                      {"n_dev", r.n_dev},
                      {"n_test", r.n_test},
                      {"best_epoch", r.best_epoch},
                      {"reasoning_and_evidence", prf_json(r.all)},
                      {"reasoning", opt_prf_json(r.reasoning)},
                      {"evidence", opt_prf_json(r.evidence)}});
    doc["rows"] = rs;

    json aggs = json::array();
    for (const auto& a : aggregates_)
        aggs.push_back({{"condition", a.condition.label()},
                        {"scope", name(a.scope)},
                        {"runs", a.runs},
                        {"mean", prf_json(a.mean)}});
    doc["aggregates"] = aggs;

    json cmps = json::array();
    for (const auto& c : comparisons_)
        cmps.push_back({{"condition", c.condition.label()},
                        {"baseline", kBaseLong.label()},
                        {"scope", name(c.scope)},
                        {"metric", name(c.metric)},
                        {"n", c.test.n},
                        {"mean_difference", c.mean_difference},
                        {"t", number_json(c.test.t)},
                        {"p", c.test.p},
                        {"significant", c.test.significant}});
    doc["t_tests"] = cmps;
    return doc.dump(2) + "\n";
}

ExperimentReport ExperimentReport::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("report is not JSON: ") + e.what());
    }
    ExperimentReport rep;
    try {
        const auto digest = doc.at("config_digest").get<std::string>();
        rep.config_digest = std::stoull(digest, nullptr, 16);
        rep.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        rep.k = doc.at("k").get<int>();
        rep.shuffled_labels = doc.at("shuffled_labels").get<bool>();
        for (const auto& c : doc.at("conditions")) rep.conditions.push_back(Condition::parse(c.get<std::string>()));
        for (const auto& r : doc.at("rows")) {
            FoldResult fr;
            fr.condition = Condition::parse(r.at("condition").get<std::string>());
            fr.seed = r.at("seed").get<std::uint64_t>();
            fr.fold = r.at("fold").get<int>();
            fr.n_train = r.at("n_train").get<std::size_t>();
            fr.n_dev = r.at("n_dev").get<std::size_t>();
            fr.n_test = r.at("n_test").get<std::size_t>();
            fr.best_epoch = r.at("best_epoch").get<int>();
            fr.all = prf_from(r.at(std::string(name(Scope::All))));
            fr.reasoning = opt_prf_from(r.at(std::string(name(Scope::Reasoning))));
            fr.evidence = opt_prf_from(r.at(std::string(name(Scope::Evidence))));
            rep.rows.push_back(fr);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError("malformed report: bad config digest");
    }
    rep.finalize();
    return rep;
}

std::string ExperimentReport::to_text() const {
    std::string out;
    out += "config_digest " + hex64(config_digest) + "\n";
    out += "seeds";
    for (auto s : seeds) out += " " + std::to_string(s);
    out += "\nk " + std::to_string(k) + "\n";
    out += std::string("shuffled_labels ") + (shuffled_labels ? "yes" : "no") + "\n\n";

    out += "# runs: condition seed fold precision recall f1\n";
    for (const auto& r : rows)
        out += r.condition.label() + " " + std::to_string(r.seed) + " " + std::to_string(r.fold) + " " +
               fmt("%.6f", r.all.precision) + " " + fmt("%.6f", r.all.recall) + " " + fmt("%.6f", r.all.f1) + "\n";

    out += "\n# means: condition scope runs precision recall f1\n";
    for (const auto& a : aggregates_)
        out += a.condition.label() + " " + std::string(name(a.scope)) + " " + std::to_string(a.runs) + " " +
               fmt("%.6f", a.mean.precision) + " " + fmt("%.6f", a.mean.recall) + " " + fmt("%.6f", a.mean.f1) +
               "\n";

    out += "\n# paired t-tests against " + kBaseLong.label() + ": condition scope metric n mean_diff t p\n";
    for (const auto& c : comparisons_)
        out += c.condition.label() + " " + std::string(name(c.scope)) + " " + std::string(name(c.metric)) + " " +
               std::to_string(c.test.n) + " " + fmt("%+.6f", c.mean_difference) + " " + fmt("%.6f", c.test.t) +
               " " + fmt("%.6f", c.test.p) + (c.test.significant ? " significant" : "") + "\n";
    return out;
}

std::string ExperimentReport::to_table() const {
    auto kind_label = [](ContextKind k) -> std::string {
        switch (k) {
            case ContextKind::BaseShort: return "Base-Short";
            case ContextKind::BaseLong: return "Base-Long";
            case ContextKind::AcClaim: return "AC-Claim";
            case ContextKind::AcReasoning: return "AC-Reasoning";
            case ContextKind::AcEvidence: return "AC-Evidence";
        }
        return "";
    };
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    auto lpad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    constexpr std::size_t kCell = 8;
    const char* groups[] = {"Reasoning & Evidence ARs", "Reasoning ARs", "Evidence ARs"};

    std::string head1 = pad("Contexts", 14) + pad("Prompts", 8);
    std::string head2 = pad("", 22);
    for (const char* g : groups) {
        head1 += "| " + pad(g, 3 * kCell);
        head2 += "| " + lpad("P", kCell) + lpad("R", kCell) + lpad("F1", kCell);
    }
    std::string rule(head1.size(), '-');
    std::string out = head1 + "\n" + head2 + "\n" + rule + "\n";

    bool prev_generated = false;
    for (const auto& c : conditions) {
        if (is_generated(c.kind) != prev_generated && &c != &conditions.front()) out += rule + "\n";
        prev_generated = is_generated(c.kind);
        std::string line = pad(kind_label(c.kind), 14) +
                           pad(c.strategy ? (*c.strategy == PromptStrategy::CoT ? "CoT" : "Single") : "N/A", 8);
        std::optional<Condition> twin;
        if (c.strategy == PromptStrategy::CoT) twin = Condition{c.kind, PromptStrategy::Single};
        for (auto s : kScopes) {
            line += "| ";
            const auto* agg = find(c, s);
            const auto* twin_agg = twin ? find(*twin, s) : nullptr;
            for (auto m : kMetrics) {
                if (!agg) {
                    line += lpad("-", kCell);
                    continue;
                }
                const double v = metric_of(agg->mean, m);
                std::string cell = fmt("%.2f", 100.0 * v);
                const auto* cmp = find(c, s, m);
                if (cmp && cmp->test.significant && cmp->mean_difference > 0) cell += "+";
                if (twin_agg && v > metric_of(twin_agg->mean, m)) cell += "*";
                line += lpad(cell, kCell);
            }
        }
        out += line + "\n";
    }
    out += rule + "\n";
    out += "Scores are mean macro metrics (%) over seeds and folds. '+': better than Base-Long, paired t-test p < "
           "0.05. '*': CoT above Single.\n";
    return out;
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    detail::write_file_atomic(dir / "report.json", to_json());
    detail::write_file_atomic(dir / "report.txt", to_text());
    detail::write_file_atomic(dir / "table.txt", to_table());
}

namespace {

std::uint64_t experiment_digest(const ExperimentConfig& cfg) {
    std::string s = "k=" + std::to_string(cfg.k) + ";train=" + hex64(cfg.train.digest()) + ";seeds=";
    for (auto x : cfg.seeds) s += std::to_string(x) + ",";
    s += ";conditions=";
    for (const auto& c : cfg.conditions) s += c.label() + ",";
    if (cfg.label_permutation_seed) s += ";permute=" + std::to_string(*cfg.label_permutation_seed);
    return fnv1a64(s);
}

struct Task {
    std::size_t condition;
    std::size_t seed;
    int fold;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::vector<Revision>& revisions,
                                const ContextStore& contexts, Embedder& embedder) {
    cfg.validate();

    std::map<std::pair<std::string, std::size_t>, Element> element_of;
    for (const auto& r : revisions)
        if (is_argumentative(r)) element_of[{r.essay_id, r.alignment_index}] = *r.element;

    // pairs[condition][seed]
    std::vector<std::vector<std::vector<ArPair>>> pairs(cfg.conditions.size());
    std::vector<std::string> gaps;
    for (std::size_t c = 0; c < cfg.conditions.size(); ++c) {
        pairs[c].resize(cfg.seeds.size());
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            // Location contexts do not depend on the seed run.
            if (!is_generated(cfg.conditions[c].kind) && s > 0) {
                pairs[c][s] = pairs[c][0];
                continue;
            }
            try {
                pairs[c][s] = build_ar_pairs(revisions, contexts, cfg.conditions[c], static_cast<int>(s));
            } catch (const LookupError& e) {
                gaps.push_back(e.what());
            }
        }
    }
    if (!gaps.empty()) {
        std::string msg = "missing contexts:";
        for (const auto& g : gaps) msg += "\n  " + g;
        throw ConfigError(msg);
    }
    const auto& reference = pairs.front().front();
    if (reference.empty()) throw ConfigError("no argumentative revisions to evaluate");

    if (cfg.label_permutation_seed) {
        std::vector<QualityLabel> labels;
        for (const auto& p : reference) labels.push_back(p.label);
        Rng rng(*cfg.label_permutation_seed);
        rng.shuffle(labels);
        for (auto& per_seed : pairs)
            for (auto& ps : per_seed)
                for (std::size_t i = 0; i < ps.size(); ++i) ps[i].label = labels[i];
    }

    std::map<std::string, std::vector<double>> pooled;
    {
        std::vector<std::string> texts;
        for (const auto& per_seed : pairs)
            for (const auto& ps : per_seed)
                for (const auto& p : ps)
                    for (const auto* t : {&p.ar_text, &p.ac_text})
                        if (pooled.emplace(*t, std::vector<double>{}).second) texts.push_back(*t);
        auto mats = embedder.embed_batch(texts);
        for (std::size_t i = 0; i < texts.size(); ++i) pooled[texts[i]] = pool(mats[i]);
    }
    auto examples_of = [&](const std::vector<ArPair>& ps, const std::vector<std::size_t>& idx) {
        std::vector<Example> out;
        out.reserve(idx.size());
        for (auto i : idx) out.push_back({pooled.at(ps[i].ar_text), pooled.at(ps[i].ac_text), ps[i].label});
        return out;
    };

    std::vector<std::vector<FoldSplit>> splits;
    for (auto seed : cfg.seeds) splits.push_back(kfold_split(reference, cfg.k, seed));

    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cfg.conditions.size(); ++c)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
            for (int f = 0; f < cfg.k; ++f) tasks.push_back({c, s, f});

    std::vector<FoldResult> results(tasks.size());
    auto run_task = [&](std::size_t t) {
        const auto [c, s, f] = tasks[t];
        const auto& ps = pairs[c][s];
        const auto& split = splits[s][static_cast<std::size_t>(f)];
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seeds[s] * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(f);
        auto trained = train(examples_of(ps, split.train), examples_of(ps, split.dev), tc);

        std::vector<QualityLabel> preds, golds;
        std::vector<QualityLabel> preds_r, golds_r, preds_e, golds_e;
        const auto test = examples_of(ps, split.test);
        for (std::size_t i = 0; i < test.size(); ++i) {
            const auto label = forward_eval(test[i].ar, test[i].ac, trained.params).label;
            const auto& pr = ps[split.test[i]];
            preds.push_back(label);
            golds.push_back(pr.label);
            const bool reasoning = element_of.at({pr.essay_id, pr.alignment_index}) == Element::Reasoning;
            (reasoning ? preds_r : preds_e).push_back(label);
            (reasoning ? golds_r : golds_e).push_back(pr.label);
        }
        FoldResult& r = results[t];
        r.condition = cfg.conditions[c];
        r.seed = cfg.seeds[s];
        r.fold = f;
        r.n_train = split.train.size();
        r.n_dev = split.dev.size();
        r.n_test = split.test.size();
        r.best_epoch = trained.best_epoch;
        r.all = macro_prf(preds, golds);
        if (!preds_r.empty()) r.reasoning = macro_prf(preds_r, golds_r);
        if (!preds_e.empty()) r.evidence = macro_prf(preds_e, golds_e);
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), tasks.size());
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool_threads;
            for (std::size_t w = 0; w < workers; ++w)
                pool_threads.emplace_back([&, w] {
                    try {
                        for (std::size_t t; (t = next++) < tasks.size();) run_task(t);
                    } catch (...) {
                        errors[w] = std::current_exception();
                        next = tasks.size();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    ExperimentReport rep;
    rep.config_digest = experiment_digest(cfg);
    rep.seeds = cfg.seeds;
    rep.k = cfg.k;
    rep.shuffled_labels = cfg.label_permutation_seed.has_value();
    rep.conditions = cfg.conditions;
    rep.rows = std::move(results);
    rep.finalize();
    return rep;
}

}  // namespace arq
