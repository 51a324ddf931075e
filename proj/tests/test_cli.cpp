#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "arq/corpus.hpp"
#include "arq/model.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out, err;
};

Run arq_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "arq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int status = arq::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// First `n` synthetic essays and their annotations, copied into `dir`.
void small_inputs(const fs::path& dir, std::size_t n) {
    auto corpus = arq::load_corpus(arq::testing::data_dir() / "synthetic" / "corpus.jsonl");
    corpus.resize(n);
    std::set<std::string> ids;
    for (const auto& d : corpus) ids.insert(d.essay_id);
    std::vector<arq::GoldAnnotation> kept;
    for (auto& a : arq::load_annotations(arq::testing::data_dir() / "synthetic" / "annotations.jsonl"))
        if (ids.contains(a.essay_id)) kept.push_back(a);
    std::ofstream c(dir / "in_corpus.jsonl");
    arq::write_corpus(c, corpus);
    std::ofstream a(dir / "in_annotations.jsonl");
    arq::write_annotations(a, kept);
}

}  // namespace

TEST(Cli, StagesChainThroughArtifacts) {
    const auto dir = arq::testing::scratch_dir("cli-stages");
    const auto out = (dir / "out").string();
    const auto fixtures = arq::testing::data_dir() / "fixtures";
    auto r = arq_cli({"ingest", "--out", out, "--corpus", (fixtures / "table2_corpus.jsonl").string(),
                      "--annotations", (fixtures / "table2_annotations.jsonl").string()});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("ingested 1 essays, 4 annotations"), std::string::npos) << r.out;

    r = arq_cli({"align", "--out", out});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("6 changed pairs"), std::string::npos) << r.out;

    r = arq_cli({"extract", "--out", out});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("extracted 6 revisions, 4 argumentative"), std::string::npos) << r.out;

    r = arq_cli({"gen-context", "--out", out, "--provider", "mock", "--seeds", "1", "--conditions",
                 "base-short,ac-claim:cot"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(fs::path(out) / "contexts.jsonl"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "pairs" / "ac-claim_cot.seed0.jsonl"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "pairs" / "base-short.seed0.jsonl"));

    // A second generation replays from the cache.
    r = arq_cli({"gen-context", "--out", out, "--provider", "mock", "--seeds", "1", "--conditions", "ac-claim:cot"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("0 provider calls"), std::string::npos) << r.out;
}

TEST(Cli, TrainEvaluateReport) {
    const auto dir = arq::testing::scratch_dir("cli-eval");
    small_inputs(dir, 16);
    const auto out = (dir / "out").string();
    const std::vector<std::string> inputs{"--out", out, "--corpus", (dir / "in_corpus.jsonl").string(),
                                          "--annotations", (dir / "in_annotations.jsonl").string()};
    auto with = [&](std::vector<std::string> args) {
        args.insert(args.end(), inputs.begin(), inputs.end());
        return arq_cli(args);
    };

    auto r = with({"train", "--condition", "ac-claim:single", "--provider", "mock", "--epochs", "2", "--hidden", "8",
                   "--embed-dim", "8", "--seeds", "4"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto ckpt = fs::path(out) / "models" / "ac-claim_single.seed4.ckpt";
    ASSERT_TRUE(fs::exists(ckpt)) << r.out;
    EXPECT_EQ(arq::load_checkpoint(ckpt).params.d, 8u);

    r = with({"evaluate", "--mock-llm", "--hash-embed", "--embed-dim", "8", "--epochs", "2", "--hidden", "8", "--k",
              "3", "--seeds", "1,2", "--conditions", "base-short,base-long,ac-claim:single"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("AC-Claim"), std::string::npos) << r.out;
    const auto report_dir = fs::path(out) / "report";
    const auto json = slurp(report_dir / "report.json");
    const auto table = slurp(report_dir / "table.txt");
    EXPECT_FALSE(json.empty());

    r = arq_cli({"report", "--out", out});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, table);
    EXPECT_EQ(slurp(report_dir / "report.json"), json);
}

TEST(Cli, ErrorsAreReportedWithStatusOne) {
    const auto dir = arq::testing::scratch_dir("cli-errors");
    auto r = arq_cli({"extract", "--out", (dir / "empty").string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error: missing"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("arq"), std::string::npos);

    r = arq_cli({"report", "--out", (dir / "empty").string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("arq evaluate"), std::string::npos) << r.err;

    r = arq_cli({"evaluate", "--out", (dir / "empty").string(), "--seeds", "x"});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("bad seed"), std::string::npos) << r.err;

    r = arq_cli({"evaluate", "--out", (dir / "empty").string(), "--conditions", "bogus"});
    EXPECT_EQ(r.status, 1);

    r = arq_cli({"align", "--no-such-flag"});
    EXPECT_NE(r.status, 0);

    r = arq_cli({"ingest", "--out", (dir / "x").string(), "--corpus", "/nonexistent.jsonl", "--annotations",
                 "/nonexistent.jsonl"});
    EXPECT_EQ(r.status, 1);
}
