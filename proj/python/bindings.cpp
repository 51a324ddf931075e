// Python extension `arq._arq`.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arq/align.hpp"
#include "arq/context.hpp"
#include "arq/corpus.hpp"
#include "arq/embed.hpp"
#include "arq/error.hpp"
#include "arq/eval.hpp"
#include "arq/llm_client.hpp"
#include "arq/pipeline.hpp"
#include "arq/revision.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace arq;

namespace {

template <class E>
E parse_enum(const std::string& text, const char* what) {
    if (auto v = try_parse<E>(text)) return *v;
    throw ConfigError(std::string("unknown ") + what + " '" + text + "'");
}

ContextKind generated_kind(const std::string& slot) {
    if (slot == "claim") return ContextKind::AcClaim;
    if (slot == "reasoning") return ContextKind::AcReasoning;
    if (slot == "evidence") return ContextKind::AcEvidence;
    throw ConfigError("slot must be claim, reasoning or evidence, got '" + slot + "'");
}

std::vector<QualityLabel> to_labels(const std::vector<int>& v) {
    std::vector<QualityLabel> out;
    out.reserve(v.size());
    for (int x : v) {
        if (x != 0 && x != 1) throw ContractError("labels must be 0 or 1");
        out.push_back(x ? QualityLabel::Successful : QualityLabel::Unsuccessful);
    }
    return out;
}

py::tuple pair_tuple(const AlignedPair& p) {
    return py::make_tuple(p.orig_index ? py::cast(*p.orig_index) : py::none(),
                          p.rev_index ? py::cast(*p.rev_index) : py::none(), std::string(name(p.op)));
}

std::vector<py::tuple> align(const std::vector<std::string>& original, const std::vector<std::string>& revised,
                             double threshold) {
    std::vector<py::tuple> out;
    for (const auto& p : align_sentences(make_sentences(original), make_sentences(revised), lcs_ratio, {threshold}))
        out.push_back(pair_tuple(p));
    return out;
}

py::list location_contexts_of(const std::vector<std::string>& original, const std::vector<std::string>& revised,
                              double threshold) {
    DraftPair d{"essay", "", make_sentences(original), make_sentences(revised)};
    const auto pairs = align_sentences(d.original, d.revised, lcs_ratio, {threshold});
    py::list out;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].op == RevisionOp::NoChange) continue;
        py::dict row;
        row["alignment_index"] = k;
        row["op"] = std::string(name(pairs[k].op));
        row["base_short"] = base_short(d, pairs, k);
        row["base_long"] = base_long(d, pairs, k);
        out.append(row);
    }
    return out;
}

py::array_t<double> hash_embed(const std::string& text, std::size_t dim) {
    HashEmbedder e(dim);
    const auto m = e.embed(text);
    py::array_t<double> out({m.rows(), m.cols()});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
    return out;
}

std::string evaluate(const std::string& corpus_path, const std::string& annotations_path,
                     const std::vector<std::string>& conditions, const std::vector<std::uint64_t>& seeds, int k,
                     int epochs, std::size_t hidden, std::size_t embed_dim, std::optional<std::uint64_t> shuffle_labels,
                     int workers) {
    ExperimentConfig cfg;
    for (const auto& c : conditions) cfg.conditions.push_back(Condition::parse(c));
    if (cfg.conditions.empty()) cfg.conditions = all_conditions();
    cfg.seeds = seeds;
    cfg.k = k;
    cfg.train.epochs = epochs;
    cfg.train.hidden = hidden;
    cfg.label_permutation_seed = shuffle_labels;
    cfg.workers = workers;
    cfg.validate();

    py::gil_scoped_release unlocked;
    const auto corpus = load_corpus(corpus_path);
    const auto alignments = align_corpus(corpus, lcs_ratio);
    const auto annotations = load_annotations(annotations_path, alignment_ops(alignments));
    const auto revisions = extract_corpus_revisions(corpus, alignments, annotations);
    auto store = location_contexts(corpus, alignments);
    llm::ChatClient client(std::make_shared<HeuristicProvider>());
    generate_contexts(corpus, cfg.conditions, static_cast<int>(seeds.size()), client, {}, store);
    HashEmbedder embedder(embed_dim);
    return run_experiment(cfg, revisions, store, embedder).to_json();
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full{"arq"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int status;
    {
        py::gil_scoped_release unlocked;
        status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(status, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_arq, m) {
    m.doc() = "Argumentative revision quality: alignment, contexts, metrics and evaluation";

    auto base = py::register_exception<Error>(m, "ArqError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<IndexError>(m, "IndexError", base.ptr());
    py::register_exception<LookupError>(m, "LookupError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
    py::register_exception<EmbedError>(m, "EmbedError", base.ptr());
    py::register_exception<TransportError>(m, "TransportError", base.ptr());

    m.def("segment_text", [](const std::string& raw) {
        std::vector<std::string> out;
        for (auto& s : segment_text(raw)) out.push_back(std::move(s.text));
        return out;
    }, py::arg("raw"));
    m.def("lcs_ratio", [](const std::string& a, const std::string& b) { return lcs_ratio(a, b); });
    m.def("align", &align, py::arg("original"), py::arg("revised"), py::arg("threshold") = 0.5,
          "Aligned pairs as (orig_index | None, rev_index | None, op).");
    m.def("label_pair", [](std::optional<std::string> a, std::optional<std::string> b) {
        return std::string(name(label_pair(a, b)));
    }, py::arg("original"), py::arg("revised"));
    m.def("encode_quality", [](const std::string& element, const std::string& purpose) {
        return std::string(name(encode_quality(parse_enum<Element>(element, "element"),
                                               parse_enum<RerPurpose>(purpose, "purpose"))));
    }, py::arg("element"), py::arg("purpose"));
    m.def("location_contexts", &location_contexts_of, py::arg("original"), py::arg("revised"),
          py::arg("threshold") = 0.5, "Base-Short and Base-Long context of every changed pair.");
    m.def("render_single_prompt", [](const std::string& slot, const std::string& essay) {
        return render_single_prompt(generated_kind(slot), essay);
    }, py::arg("slot"), py::arg("essay"));
    m.def("render_cot_prompts", [](const std::string& slot, const std::string& essay) {
        return render_cot_prompts(generated_kind(slot), essay);
    }, py::arg("slot"), py::arg("essay"));

    m.def("macro_prf", [](const std::vector<int>& preds, const std::vector<int>& golds) {
        auto r = macro_prf(to_labels(preds), to_labels(golds));
        return py::make_tuple(r.precision, r.recall, r.f1);
    }, py::arg("preds"), py::arg("golds"), "Labels are 1 (successful) or 0 (unsuccessful).");
    m.def("paired_ttest", [](const std::vector<double>& a, const std::vector<double>& b) {
        auto r = paired_ttest(a, b);
        py::dict d;
        d["t"] = r.t;
        d["p"] = r.p;
        d["significant"] = r.significant;
        d["n"] = r.n;
        return d;
    }, py::arg("a"), py::arg("b"));
    m.def("cohen_kappa", [](const std::vector<int>& x, const std::vector<int>& y) { return cohen_kappa(x, y); });

    m.def("hash_embed", &hash_embed, py::arg("text"), py::arg("dim") = 64,
          "Token-by-dimension matrix from the hash embedder.");
    m.def("evaluate", &evaluate, py::arg("corpus"), py::arg("annotations"),
          py::arg("conditions") = std::vector<std::string>{}, py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3},
          py::arg("k") = 10, py::arg("epochs") = 20, py::arg("hidden") = 256, py::arg("embed_dim") = 64,
          py::arg("shuffle_labels") = py::none(), py::arg("workers") = 1,
          "Offline evaluation (extractive context responder, hash embeddings). Returns report JSON.");
    m.def("run_cli", &run_cli, py::arg("args"), "Runs the arq command line; returns (status, stdout, stderr).");
}
