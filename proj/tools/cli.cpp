#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "arq/align.hpp"
#include "arq/context.hpp"
#include "arq/corpus.hpp"
#include "arq/embed.hpp"
#include "arq/error.hpp"
#include "arq/eval.hpp"
#include "arq/llm_client.hpp"
#include "arq/model.hpp"
#include "arq/pairs.hpp"
#include "arq/pipeline.hpp"
#include "arq/revision.hpp"

namespace arq::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string out = "arq-out";
    std::string corpus;
    std::string annotations;
    std::string cache;

    std::string provider = "remote";
    bool mock_llm = false;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 1.0;
    int max_tokens = 256;
    int max_reasks = 2;
    int max_in_flight = 4;

    std::string embed = "hash";
    bool hash_embed = false;
    std::size_t embed_dim = 64;
    std::string embed_endpoint;

    std::string conditions;
    std::string condition = "base-long";
    std::string seeds = "1,2,3";
    int k = 10;
    int workers = 1;
    std::optional<std::uint64_t> shuffle_labels;
    double threshold = 0.5;
    TrainConfig train;
};

fs::path artifact_path(const Options& o, const char* name) { return fs::path(o.out) / name; }

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ConfigError("bad seed '" + item + "'");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ConfigError("no seeds given");
    return seeds;
}

std::vector<Condition> conditions_of(const Options& o) {
    return o.conditions.empty() ? all_conditions() : parse_conditions(o.conditions);
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
    std::ostringstream ss;
    fn(ss);
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + tmp.string());
        f << ss.str();
        if (!f) throw ConfigError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

[[noreturn]] void missing(const fs::path& path, const std::string& producer) {
    throw ConfigError("missing " + path.string() + "; produce it with `arq " + producer + "`");
}

// Each stage below writes its artifact; the ensure_* helpers load an artifact
// or, when the raw inputs were given on the command line, run the stage.

void do_ingest(const Options& o, std::ostream& out) {
    if (o.corpus.empty() || o.annotations.empty()) throw ConfigError("ingest needs --corpus and --annotations");
    auto corpus = load_corpus(o.corpus);
    auto annotations = load_annotations(o.annotations);
    write_stream(artifact_path(o, artifact::kCorpus), [&](std::ostream& s) { write_corpus(s, corpus); });
    write_stream(artifact_path(o, artifact::kAnnotations),
                 [&](std::ostream& s) { write_annotations(s, annotations); });
    out << "ingested " << corpus.size() << " essays, " << annotations.size() << " annotations\n";
}

std::vector<DraftPair> ensure_corpus(const Options& o, std::ostream& out) {
    const auto path = artifact_path(o, artifact::kCorpus);
    if (!fs::exists(path)) {
        if (o.corpus.empty() || o.annotations.empty()) missing(path, "ingest --corpus FILE --annotations FILE");
        do_ingest(o, out);
    }
    return load_corpus(path);
}

EssayAlignments do_align(const Options& o, std::ostream& out) {
    auto corpus = ensure_corpus(o, out);
    AlignConfig cfg;
    cfg.match_threshold = o.threshold;
    cfg.validate();
    auto alignments = align_corpus(corpus, lcs_ratio, cfg);
    write_stream(artifact_path(o, artifact::kAlignments),
                 [&](std::ostream& s) { write_alignments(s, corpus, alignments); });
    std::size_t changed = 0;
    for (const auto& [id, pairs] : alignments)
        for (const auto& p : pairs) changed += p.op != RevisionOp::NoChange;
    out << "aligned " << alignments.size() << " essays, " << changed << " changed pairs\n";
    return alignments;
}

EssayAlignments ensure_alignments(const Options& o, std::ostream& out) {
    const auto path = artifact_path(o, artifact::kAlignments);
    if (!fs::exists(path)) {
        if (o.corpus.empty()) missing(path, "align");
        return do_align(o, out);
    }
    return load_alignments(path);
}

std::vector<Revision> do_extract(const Options& o, std::ostream& out) {
    auto corpus = ensure_corpus(o, out);
    auto alignments = ensure_alignments(o, out);
    const auto ann_path = artifact_path(o, artifact::kAnnotations);
    if (!fs::exists(ann_path)) missing(ann_path, "ingest");
    auto annotations = load_annotations(ann_path, alignment_ops(alignments));
    auto revisions = extract_corpus_revisions(corpus, alignments, annotations);
    write_stream(artifact_path(o, artifact::kRevisions), [&](std::ostream& s) { write_revisions(s, revisions); });
    std::size_t argumentative = 0;
    for (const auto& r : revisions) argumentative += is_argumentative(r);
    out << "extracted " << revisions.size() << " revisions, " << argumentative << " argumentative\n";
    return revisions;
}

std::vector<Revision> ensure_revisions(const Options& o, std::ostream& out) {
    const auto path = artifact_path(o, artifact::kRevisions);
    if (!fs::exists(path)) {
        if (o.corpus.empty()) missing(path, "extract");
        return do_extract(o, out);
    }
    return load_revisions(path);
}

std::shared_ptr<llm::ChatProvider> make_provider(const Options& o) {
    const std::string kind = o.mock_llm ? "mock" : o.provider;
    if (kind == "mock") return std::make_shared<HeuristicProvider>();
    if (kind == "remote") {
        llm::HttpProviderConfig cfg;
        cfg.endpoint = o.endpoint;
        cfg.api_key = llm::api_key_from_env();
        return std::make_shared<llm::HttpChatProvider>(cfg);
    }
    throw ConfigError("unknown provider '" + kind + "' (expected remote or mock)");
}

std::unique_ptr<Embedder> make_embedder(const Options& o) {
    const std::string kind = o.hash_embed ? "hash" : o.embed;
    if (kind == "hash") return std::make_unique<HashEmbedder>(o.embed_dim);
    if (kind == "remote") {
        if (o.embed_endpoint.empty()) throw ConfigError("--embed remote needs --embed-endpoint");
        RemoteEmbedConfig cfg;
        cfg.endpoint = o.embed_endpoint;
        return std::make_unique<RemoteEmbedder>(cfg);
    }
    throw ConfigError("unknown embedder '" + kind + "' (expected hash or remote)");
}

ContextStore do_contexts(const Options& o, std::ostream& out, const std::vector<Condition>& conditions,
                         int seed_runs) {
    auto corpus = ensure_corpus(o, out);
    auto alignments = ensure_alignments(o, out);
    auto revisions = ensure_revisions(o, out);

    const auto path = artifact_path(o, artifact::kContexts);
    ContextStore store = fs::exists(path) ? ContextStore::load(path) : ContextStore{};
    const auto location = location_contexts(corpus, alignments);
    for (const auto& ctx : location.items()) store.insert(ctx);

    bool any_generated = false;
    for (const auto& c : conditions) any_generated |= is_generated(c.kind);
    if (any_generated) {
        const fs::path cache = o.cache.empty() ? artifact_path(o, artifact::kCacheDir) : fs::path(o.cache);
        llm::ChatClient client(make_provider(o), cache, {}, o.max_in_flight);
        GenerationConfig gen;
        gen.model_id = o.model_id;
        gen.temperature = o.temperature;
        gen.max_tokens = o.max_tokens;
        gen.max_reasks = o.max_reasks;
        generate_contexts(corpus, conditions, seed_runs, client, gen, store, o.max_in_flight);
        const auto st = client.stats();
        out << "generation: " << st.provider_calls << " provider calls, " << st.cache_hits << " cache hits\n";
    }
    write_stream(path, [&](std::ostream& s) { store.write(s); });

    std::size_t written = 0;
    for (const auto& c : conditions)
        for (int run = 0; run < (is_generated(c.kind) ? seed_runs : 1); ++run) {
            auto pairs = build_ar_pairs(revisions, store, c, run);
            write_stream(artifact_path(o, artifact::kPairsDir) / pairs_file_name(c, run),
                         [&](std::ostream& s) { write_ar_pairs(s, pairs); });
            ++written;
        }
    out << "contexts: " << store.size() << " stored, " << written << " pair files\n";
    return store;
}

void do_train(const Options& o, std::ostream& out) {
    const auto seeds = parse_seeds(o.seeds);
    const auto condition = Condition::parse(o.condition);
    auto revisions = ensure_revisions(o, out);
    auto store = do_contexts(o, out, {condition}, 1);
    auto pairs = build_ar_pairs(revisions, store, condition, 0);
    if (pairs.empty()) throw ConfigError("no argumentative revisions to train on");

    // Hold out one fifth of the essays as the dev set.
    const auto split = kfold_split(pairs, 5, seeds.front()).front();
    std::vector<ArPair> train_pairs, dev_pairs;
    for (auto i : split.train) train_pairs.push_back(pairs[i]);
    for (auto i : split.dev) train_pairs.push_back(pairs[i]);
    for (auto i : split.test) dev_pairs.push_back(pairs[i]);

    auto embedder = make_embedder(o);
    TrainConfig cfg = o.train;
    cfg.seed = seeds.front();
    auto result = train(featurize(train_pairs, *embedder), featurize(dev_pairs, *embedder), cfg);

    std::string name = condition.label();
    for (char& c : name)
        if (c == ':') c = '_';
    const auto path = artifact_path(o, artifact::kModelsDir) / (name + ".seed" + std::to_string(cfg.seed) + ".ckpt");
    fs::create_directories(path.parent_path());
    save_checkpoint(path, result.params, cfg.digest());
    char line[160];
    std::snprintf(line, sizeof line, "trained %s on %zu pairs: best epoch %d, dev macro-F1 %.6f\n",
                  condition.label().c_str(), train_pairs.size(), result.best_epoch, result.best_dev_macro_f1);
    out << line << "checkpoint " << path.string() << "\n";
}

void do_evaluate(const Options& o, std::ostream& out) {
    ExperimentConfig cfg;
    cfg.conditions = conditions_of(o);
    cfg.seeds = parse_seeds(o.seeds);
    cfg.k = o.k;
    cfg.train = o.train;
    cfg.workers = o.workers;
    cfg.label_permutation_seed = o.shuffle_labels;
    cfg.validate();

    auto revisions = ensure_revisions(o, out);
    auto store = do_contexts(o, out, cfg.conditions, static_cast<int>(cfg.seeds.size()));
    auto embedder = make_embedder(o);
    auto report = run_experiment(cfg, revisions, store, *embedder);
    const auto dir = artifact_path(o, artifact::kReportDir);
    report.write(dir);
    out << report.to_table() << "report written to " << dir.string() << "\n";
}

void do_report(const Options& o, std::ostream& out) {
    const auto dir = artifact_path(o, artifact::kReportDir);
    const auto path = dir / "report.json";
    if (!fs::exists(path)) missing(path, "evaluate");
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    auto report = ExperimentReport::from_json(ss.str());
    report.write(dir);
    out << report.to_table();
}

void add_input_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--out", o.out, "Artifact directory")->capture_default_str();
    cmd->add_option("--corpus", o.corpus, "Draft-pair corpus (JSONL)");
    cmd->add_option("--annotations", o.annotations, "Gold revision annotations (JSONL)");
}

void add_align_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--threshold", o.threshold, "Minimum similarity for a sentence match")->capture_default_str();
}

void add_generation_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--provider", o.provider, "Chat provider: remote or mock")->capture_default_str();
    cmd->add_flag("--mock-llm", o.mock_llm, "Same as --provider mock");
    cmd->add_option("--cache", o.cache, "Response cache directory (default OUT/cache)");
    cmd->add_option("--endpoint", o.endpoint, "Chat-completions URL")->capture_default_str();
    cmd->add_option("--model-id", o.model_id, "Chat model name")->capture_default_str();
    cmd->add_option("--temperature", o.temperature)->capture_default_str();
    cmd->add_option("--max-tokens", o.max_tokens)->capture_default_str();
    cmd->add_option("--max-reasks", o.max_reasks, "Re-asks when a reply is not two sentences")
        ->capture_default_str();
    cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent provider requests")->capture_default_str();
    cmd->add_option("--seeds", o.seeds, "Comma-separated seeds; one generation run per seed")
        ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--embed", o.embed, "Embedder: hash or remote")->capture_default_str();
    cmd->add_flag("--hash-embed", o.hash_embed, "Same as --embed hash");
    cmd->add_option("--embed-dim", o.embed_dim, "Hash embedding width")->capture_default_str();
    cmd->add_option("--embed-endpoint", o.embed_endpoint, "Embedding service URL");
    cmd->add_option("--epochs", o.train.epochs)->capture_default_str();
    cmd->add_option("--hidden", o.train.hidden)->capture_default_str();
    cmd->add_option("--batch-size", o.train.batch_size)->capture_default_str();
    cmd->add_option("--lr", o.train.learning_rate, "Initial learning rate")->capture_default_str();
    cmd->add_option("--lr-decay", o.train.lr_decay)->capture_default_str();
    cmd->add_option("--decay-every", o.train.decay_every)->capture_default_str();
    cmd->add_option("--dropout", o.train.dropout)->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Argumentative revision quality pipeline"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Validate and normalize the corpus and annotations");
    add_input_flags(ingest, o);

    auto* align = app.add_subcommand("align", "Align original and revised sentences");
    add_input_flags(align, o);
    add_align_flags(align, o);

    auto* extract = app.add_subcommand("extract", "Extract labeled revisions");
    add_input_flags(extract, o);
    add_align_flags(extract, o);

    auto* gen = app.add_subcommand("gen-context", "Build location contexts and generate argumentative contexts");
    add_input_flags(gen, o);
    add_align_flags(gen, o);
    add_generation_flags(gen, o);
    gen->add_option("--conditions", o.conditions, "Comma-separated conditions (default: all)");

    auto* trn = app.add_subcommand("train", "Train one classifier and write a checkpoint");
    add_input_flags(trn, o);
    add_align_flags(trn, o);
    add_generation_flags(trn, o);
    add_train_flags(trn, o);
    trn->add_option("--condition", o.condition, "Context condition")->capture_default_str();

    auto* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation with significance tests");
    add_input_flags(evaluate, o);
    add_align_flags(evaluate, o);
    add_generation_flags(evaluate, o);
    add_train_flags(evaluate, o);
    evaluate->add_option("--conditions", o.conditions, "Comma-separated conditions (default: all)");
    evaluate->add_option("--k", o.k, "Number of folds")->capture_default_str();
    evaluate->add_option("--workers", o.workers, "Parallel training runs")->capture_default_str();
    evaluate->add_option("--shuffle-labels", o.shuffle_labels, "Permute gold labels with this seed (control)");

    auto* report = app.add_subcommand("report", "Render the results table from report.json");
    report->add_option("--out", o.out, "Artifact directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*ingest) do_ingest(o, out);
        else if (*align) do_align(o, out);
        else if (*extract) do_extract(o, out);
        else if (*gen) {
            do_contexts(o, out, conditions_of(o), static_cast<int>(parse_seeds(o.seeds).size()));
        } else if (*trn) do_train(o, out);
        else if (*evaluate) do_evaluate(o, out);
        else if (*report) do_report(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace arq::cli
