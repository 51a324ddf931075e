#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "arq/align.hpp"
#include "arq/corpus.hpp"
#include "arq/error.hpp"
#include "arq/pipeline.hpp"
#include "arq/revision.hpp"
#include "support.hpp"

using namespace arq;

namespace {

std::vector<std::string> texts(const std::vector<Sentence>& s) {
    std::vector<std::string> out;
    for (const auto& x : s) out.push_back(x.text);
    return out;
}

struct Table2 {
    std::vector<DraftPair> corpus;
    EssayAlignments alignments;
    std::vector<GoldAnnotation> annotations;
    std::vector<Revision> revisions;
};

Table2 load_table2() {
    const auto dir = arq::testing::data_dir() / "fixtures";
    Table2 t;
    t.corpus = load_corpus(dir / "table2_corpus.jsonl");
    t.alignments = align_corpus(t.corpus, lcs_ratio);
    t.annotations = load_annotations(dir / "table2_annotations.jsonl", alignment_ops(t.alignments));
    t.revisions = extract_corpus_revisions(t.corpus, t.alignments, t.annotations);
    return t;
}

}  // namespace

TEST(Segment, SplitsOnTerminalPunctuationFollowedBySpace) {
    EXPECT_EQ(texts(segment_text("One. Two!  Three? four")), (std::vector<std::string>{"One.", "Two!", "Three?", "four"}));
    EXPECT_EQ(texts(segment_text("Mr. Smith ran.")), (std::vector<std::string>{"Mr.", "Smith ran."}));
    EXPECT_EQ(texts(segment_text("A line\nbroken. B")), (std::vector<std::string>{"A line broken.", "B"}));
    EXPECT_EQ(texts(segment_text("3.5 is a number.")), (std::vector<std::string>{"3.5 is a number."}));
    EXPECT_TRUE(segment_text("   ").empty());
    auto s = segment_text("a. b.");
    EXPECT_EQ(s[0].index, 0u);
    EXPECT_EQ(s[1].index, 1u);
}

TEST(Corpus, ParsesBothDraftForms) {
    std::istringstream in(
        R"({"essay_id":"a","prompt_id":"mvp","original":["x.","y."],"revised_text":"x. z."})"
        "\n\n"
        R"({"essay_id":"b","prompt_id":"mvp","original":["q."],"original_text":"ignored. text.","revised":[]})"
        "\n");
    auto c = parse_corpus(in);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(texts(c[0].revised), (std::vector<std::string>{"x.", "z."}));
    EXPECT_EQ(texts(c[1].original), (std::vector<std::string>{"q."}));
    EXPECT_TRUE(c[1].revised.empty());
    EXPECT_EQ(draft_text(c[0], DraftSide::Revised), "x. z.");
}

TEST(Corpus, RejectsBadRecords) {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return parse_corpus(in);
    };
    EXPECT_THROW(parse("{not json}\n"), ParseError);
    EXPECT_THROW(parse(R"({"prompt_id":"p","original":[],"revised":[]})"), Error);
    EXPECT_THROW(parse(R"({"essay_id":"a","prompt_id":"p","original":["x."]})"), ParseError);
    EXPECT_THROW(parse(R"({"essay_id":"a","prompt_id":"p","original":[],"revised":[]})"), ValidationError);
    EXPECT_THROW(parse(R"({"essay_id":"a","prompt_id":"p","original":["x."],"revised":[]})"
                       "\n"
                       R"({"essay_id":"a","prompt_id":"p","original":["y."],"revised":[]})"),
                 ValidationError);
    try {
        parse("\n{bad\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Corpus, WriteParseRoundTrip) {
    DraftPair d{"e", "space", make_sentences({"Quote \"this\".", "Ünïcode ok."}), make_sentences({"Only one."})};
    std::stringstream ss;
    write_corpus(ss, {d});
    auto back = parse_corpus(ss);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], d);
}

TEST(Labels, NamesRoundTrip) {
    for (auto p : all_purposes()) EXPECT_EQ(try_parse<RerPurpose>(name(p)), p);
    EXPECT_EQ(all_purposes().size(), 12u);
    EXPECT_EQ(name(RerPurpose::RepeatedEvidence), "repeated_evidence");
    EXPECT_EQ(name(RerPurpose::NotLce), "not_lce");
    EXPECT_EQ(name(RevisionOp::NoChange), "no_change");
    EXPECT_FALSE(try_parse<RerPurpose>("NotLce"));
    EXPECT_FALSE(try_parse<QualityLabel>(""));
}

TEST(Quality, EncodingOfAllTwelvePurposes) {
    const std::set<RerPurpose> good = {RerPurpose::Relevant, RerPurpose::Lce, RerPurpose::ParaphraseReasoning};
    int checked = 0;
    for (auto p : all_purposes()) {
        const auto e = purpose_element(p);
        EXPECT_EQ(encode_quality(e, p), good.contains(p) ? QualityLabel::Successful : QualityLabel::Unsuccessful)
            << name(p);
        const auto other = e == Element::Evidence ? Element::Reasoning : Element::Evidence;
        EXPECT_THROW(encode_quality(other, p), ContractError);
        EXPECT_THROW(encode_quality(Element::Claim, p), ContractError);
        ++checked;
    }
    EXPECT_EQ(checked, 12);
    EXPECT_EQ(purpose_element(RerPurpose::ParaphraseEvidence), Element::Reasoning);
    EXPECT_EQ(purpose_element(RerPurpose::MinimalEvidence), Element::Evidence);
}

TEST(Annotations, QualityFilledFromPurposeAndChecked) {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return parse_annotations(in);
    };
    auto a = parse(R"({"essay_id":"e","alignment_index":0,"op":"add","edit_type":"content","element":"evidence","purpose":"relevant"})");
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].quality, QualityLabel::Successful);
    EXPECT_THROW(
        parse(R"({"essay_id":"e","alignment_index":0,"op":"add","edit_type":"content","element":"evidence","purpose":"lce"})"),
        Error);
    EXPECT_THROW(
        parse(R"({"essay_id":"e","alignment_index":0,"op":"add","edit_type":"content","element":"evidence","purpose":"relevant","quality":"unsuccessful"})"),
        Error);
    EXPECT_THROW(
        parse(R"({"essay_id":"e","alignment_index":0,"op":"add","edit_type":"content","element":"evidence","purpose":"bogus"})"),
        Error);
}

TEST(Annotations, DanglingReferencesAreRejected) {
    AlignmentOps refs{{"e", {RevisionOp::NoChange, RevisionOp::Add}}};
    GoldAnnotation ok{"e", 1, RevisionOp::Add, EditType::Content, Element::Evidence, RerPurpose::Relevant,
                      QualityLabel::Successful};
    EXPECT_NO_THROW(check_annotation_refs({ok}, refs));
    auto wrong_op = ok;
    wrong_op.op = RevisionOp::Delete;
    EXPECT_THROW(check_annotation_refs({wrong_op}, refs), ValidationError);
    auto out_of_range = ok;
    out_of_range.alignment_index = 2;
    EXPECT_THROW(check_annotation_refs({out_of_range}, refs), ValidationError);
    auto unknown = ok;
    unknown.essay_id = "nope";
    EXPECT_THROW(check_annotation_refs({unknown}, refs), ValidationError);
}

TEST(Revision, SurfaceClassification) {
    EXPECT_EQ(classify_edit_type("According to the text. \"Go.\"", "According to the text, \"Go.\""),
              EditType::Surface);
    EXPECT_EQ(classify_edit_type("It rained.", "It  RAINED!"), EditType::Surface);
    EXPECT_EQ(classify_edit_type("It rained.", "It rained a lot."), EditType::Content);
    EXPECT_EQ(classify_edit_type(std::nullopt, "It rained."), EditType::Content);
    EXPECT_EQ(classify_edit_type("It rained.", std::nullopt), EditType::Content);
    EXPECT_EQ(normalize_for_surface("  Hello,   World! "), "hello world");
}

TEST(Revision, PresenceRules) {
    Revision r;
    r.essay_id = "e";
    r.op = RevisionOp::Add;
    r.alignment.rev_index = 0;
    r.r2 = "New.";
    EXPECT_NO_THROW(check_revision(r));
    EXPECT_EQ(select_ar_text(r), "New.");
    EXPECT_EQ(context_side(r), DraftSide::Revised);
    r.r1 = "Old.";
    EXPECT_THROW(check_revision(r), ValidationError);

    Revision d;
    d.op = RevisionOp::Delete;
    d.alignment.orig_index = 3;
    d.r1 = "Gone.";
    EXPECT_NO_THROW(check_revision(d));
    EXPECT_EQ(select_ar_text(d), "Gone.");
    EXPECT_EQ(context_side(d), DraftSide::Original);

    Revision none;
    none.op = RevisionOp::NoChange;
    EXPECT_THROW(check_revision(none), ValidationError);
}

TEST(Table2Fixture, AlignmentOps) {
    auto t = load_table2();
    const auto& pairs = t.alignments.at("table2");
    std::vector<RevisionOp> ops;
    for (const auto& p : pairs) ops.push_back(p.op);
    EXPECT_EQ(ops, (std::vector<RevisionOp>{RevisionOp::Modify, RevisionOp::Modify, RevisionOp::NoChange,
                                             RevisionOp::Add, RevisionOp::Add, RevisionOp::Delete,
                                             RevisionOp::Delete}));
    EXPECT_EQ(pairs[3].rev_index, 3u);
    EXPECT_EQ(pairs[5].orig_index, 3u);
}

TEST(Table2Fixture, RevisionsAndQuality) {
    auto t = load_table2();
    ASSERT_EQ(t.revisions.size(), 6u);
    EXPECT_EQ(t.revisions[0].edit_type, EditType::Surface);
    EXPECT_EQ(t.revisions[1].edit_type, EditType::Content);
    EXPECT_FALSE(t.revisions[1].quality);
    std::vector<std::pair<std::size_t, QualityLabel>> labeled;
    for (const auto& r : t.revisions)
        if (is_argumentative(r)) labeled.emplace_back(r.alignment_index, *r.quality);
    EXPECT_EQ(labeled, (std::vector<std::pair<std::size_t, QualityLabel>>{
                           {3, QualityLabel::Successful},
                           {4, QualityLabel::Unsuccessful},
                           {5, QualityLabel::Unsuccessful},
                           {6, QualityLabel::Successful}}));
    for (const auto& r : t.revisions) EXPECT_NO_THROW(check_revision(r));
}

TEST(Table2Fixture, RevisionFileRoundTrip) {
    auto t = load_table2();
    std::stringstream ss;
    write_revisions(ss, t.revisions);
    EXPECT_EQ(parse_revisions(ss), t.revisions);
}
