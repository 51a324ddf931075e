// Generates the bundled synthetic corpus: draft pairs whose argumentative
// revisions are labeled by essay. Successful essays state their claims with
// one vocabulary and unsuccessful essays with another, while the revised
// sentences themselves come from a pool shared by both classes. Only a
// context that carries the claims can tell the classes apart.
//
//   make_synthetic --out data/synthetic --essays 100 --seed 7

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arq/align.hpp"
#include "arq/corpus.hpp"
#include "arq/model.hpp"
#include "arq/revision.hpp"

namespace {

using namespace arq;

const std::vector<std::string> kIntros = {
    "The Millennium Villages Project came to Sauri in Kenya.",
    "Sauri is a small village in western Kenya.",
    "The story follows a village that joined a large aid project.",
    "People in Sauri used to live with very little.",
    "The article describes life in a Kenyan village.",
};

const std::vector<std::string> kConclusions = {
    "That is what the story of Sauri tells us.",
    "So the village story has a clear lesson.",
    "In the end the reader can see what happened.",
    "That is my view of the whole story.",
    "The story of the village ends there.",
};

const std::vector<std::string> kClaimsSuccessful = {
    "I believe the project is winning the fight against poverty with schools, clinics and fertile harvests.",
    "In my opinion the villagers are building a hopeful, healthy and prosperous future together.",
    "I think the new schools, clinics and water pipes are real lasting solutions for progress.",
    "My claim is that the plan succeeded in ending hunger and bringing hope, health and prosperity.",
    "I argue that the program is working wonderfully, lifting families toward progress and success.",
};

const std::vector<std::string> kClaimsUnsuccessful = {
    "I believe poverty, drought and disease are still too strong for any foreign aid to defeat.",
    "In my opinion the village remains stuck in misery, debt and despair despite the donations.",
    "I think the aid cannot fix deep problems like drought, corruption, debt and famine.",
    "My claim is that the effort failed most poor children and left them hungry and hopeless.",
    "I argue that the money was wasted on empty promises, corruption and broken hopes.",
};

const std::vector<std::string> kEvidence = {
    "According to the article, malaria nets were given to every sleeping site.",
    "The text says that the hospital had no running water before.",
    "For example, farmers received fertilizer and better seeds.",
    "The article mentions that students now get a midday meal.",
    "In the text, the author visits a clinic with free medicine.",
    "According to the author, crop harvests doubled in a few years.",
    "The text says some children walked miles to reach school.",
    "For example, the village built a new water pipe.",
    "The article states that doctors were hard to find in Sauri.",
    "In the text, families paid for school with their own money.",
    "According to the story, bed nets cost only a few dollars.",
    "For example, a teacher said the pupils could not concentrate.",
    "The article reports that electricity reached the school.",
    "In the text, a mother describes her sick child.",
};

const std::vector<std::string> kReasoning = {
    "This shows that small changes can help a whole village.",
    "Because the children eat at school, they can learn better.",
    "This means that health care is the first thing people need.",
    "Therefore the farmers can sell more food at the market.",
    "This shows how hard life was before the project began.",
    "Because nets stop mosquitoes, fewer people get sick.",
    "This means the families can spend money on other needs.",
    "Therefore the school can keep its students in class.",
    "This shows that clean water protects the whole family.",
    "Because doctors are nearby, patients get help in time.",
    "This means the village still depends on outside help.",
    "Therefore people are able to plan for the next season.",
};

const std::vector<std::string> kClauses = {
    ", which means the change will last",
    " because people work together",
    ", and this shows real change",
    " for many years",
};

const std::vector<RerPurpose> kEvidenceGood = {RerPurpose::Relevant};
const std::vector<RerPurpose> kEvidenceBad = {RerPurpose::Irrelevant, RerPurpose::RepeatedEvidence,
                                              RerPurpose::NonTextBased, RerPurpose::MinimalEvidence};
const std::vector<RerPurpose> kReasoningGood = {RerPurpose::Lce, RerPurpose::ParaphraseReasoning};
const std::vector<RerPurpose> kReasoningBad = {RerPurpose::NotLce, RerPurpose::Generic, RerPurpose::Commentary,
                                               RerPurpose::MinimalReasoning, RerPurpose::ParaphraseEvidence};

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[rng.index(v.size())];
}

// Distinct draws without replacement.
std::vector<std::string> draw(const std::vector<std::string>& pool, std::size_t n, Rng& rng) {
    std::vector<std::string> copy = pool;
    rng.shuffle(copy);
    copy.resize(n);
    return copy;
}

std::string surface_variant(const std::string& s) {
    if (auto at = s.find(", "); at != std::string::npos) return s.substr(0, at) + s.substr(at + 1);
    auto space = s.find(' ');
    return s.substr(0, space) + "," + s.substr(space);
}

std::string with_clause(const std::string& s, const std::string& clause) {
    return s.substr(0, s.size() - 1) + clause + ".";
}

}  // namespace

int main(int argc, char** argv) {
    std::string out_dir = "data/synthetic";
    std::size_t essays = 100;
    std::uint64_t seed = 7;
    CLI::App app{"Generate the synthetic draft-pair corpus"};
    app.add_option("--out", out_dir)->capture_default_str();
    app.add_option("--essays", essays)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    Rng rng(seed);
    std::vector<DraftPair> corpus;
    std::map<std::string, QualityLabel> essay_label;
    std::map<std::string, Element> element_of;
    for (const auto& s : kEvidence) element_of[s] = Element::Evidence;
    for (const auto& s : kReasoning) {
        element_of[s] = Element::Reasoning;
        for (const auto& c : kClauses) element_of[with_clause(s, c)] = Element::Reasoning;
    }

    for (std::size_t i = 0; i < essays; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "syn-%03zu", i + 1);
        const auto label = i % 2 == 0 ? QualityLabel::Successful : QualityLabel::Unsuccessful;
        const auto& claim_pool = label == QualityLabel::Successful ? kClaimsSuccessful : kClaimsUnsuccessful;
        const auto claims = draw(claim_pool, 2, rng);
        const auto ev = draw(kEvidence, 4, rng);
        const auto rs = draw(kReasoning, 3, rng);
        const auto intro = pick(kIntros, rng);
        const auto concl = pick(kConclusions, rng);

        std::vector<std::string> orig = {intro, claims[0], ev[0], rs[0], ev[1], claims[1], rs[1], concl};
        std::vector<std::string> rev = {intro,
                                        claims[0],
                                        surface_variant(ev[0]),
                                        rs[2],
                                        with_clause(rs[0], pick(kClauses, rng)),
                                        claims[1],
                                        ev[2],
                                        rs[1],
                                        ev[3],
                                        concl};
        DraftPair d;
        d.essay_id = id;
        d.prompt_id = "sauri";
        d.original = make_sentences(orig);
        d.revised = make_sentences(rev);
        corpus.push_back(std::move(d));
        essay_label[id] = label;
    }

    const auto alignments = align_corpus(corpus, lcs_ratio, AlignConfig{});
    std::vector<GoldAnnotation> annotations;
    for (const auto& draft : corpus) {
        const auto label = essay_label.at(draft.essay_id);
        const auto& pairs = alignments.at(draft.essay_id);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto& p = pairs[k];
            if (p.op == RevisionOp::NoChange) continue;
            const std::string* r1 = p.orig_index ? &draft.original[*p.orig_index].text : nullptr;
            const std::string* r2 = p.rev_index ? &draft.revised[*p.rev_index].text : nullptr;
            if (classify_edit_type(r1 ? std::optional<std::string_view>(*r1) : std::nullopt,
                                   r2 ? std::optional<std::string_view>(*r2) : std::nullopt) == EditType::Surface)
                continue;
            const std::string& text = r2 ? *r2 : *r1;
            auto it = element_of.find(text);
            if (it == element_of.end()) continue;
            GoldAnnotation a;
            a.essay_id = draft.essay_id;
            a.alignment_index = k;
            a.op = p.op;
            a.edit_type = EditType::Content;
            a.element = it->second;
            const bool good = label == QualityLabel::Successful;
            a.purpose = it->second == Element::Evidence ? pick(good ? kEvidenceGood : kEvidenceBad, rng)
                                                        : pick(good ? kReasoningGood : kReasoningBad, rng);
            a.quality = encode_quality(a.element, *a.purpose);
            annotations.push_back(a);
        }
    }

    std::filesystem::create_directories(out_dir);
    std::ofstream c(std::filesystem::path(out_dir) / "corpus.jsonl");
    write_corpus(c, corpus);
    std::ofstream a(std::filesystem::path(out_dir) / "annotations.jsonl");
    write_annotations(a, annotations);
    std::cout << "wrote " << corpus.size() << " essays and " << annotations.size() << " annotations to " << out_dir
              << "\n";
    return 0;
}
