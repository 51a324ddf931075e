#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "arq/embed.hpp"
#include "arq/error.hpp"
#include "arq/hash.hpp"

using namespace arq;
using nlohmann::json;

namespace {

/// Stand-in embedding service: whitespace tokens, hash vectors, at most
/// `max_tokens` rows per text. `declared_dim` can lie to exercise the client.
class EchoEmbedServer {
public:
    explicit EchoEmbedServer(std::size_t dim = 8, std::size_t declared_dim = 0, std::size_t ragged_row = 0)
        : hash_(dim) {
        server_.Post("/embed", [=, this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("texts") || body["texts"].empty()) {
                res.status = 400;
                return;
            }
            if (body["texts"].size() > 64) {
                res.status = 413;
                return;
            }
            json mats = json::array();
            for (const auto& t : body["texts"]) {
                auto tokens = tokenize(t.get<std::string>());
                if (tokens.size() > kMaxTokens) tokens.resize(kMaxTokens);
                json rows = json::array();
                for (std::size_t r = 0; r < tokens.size(); ++r) {
                    std::vector<double> v(dim);
                    hash_.token_vector(tokens[r], v);
                    if (ragged_row && r + 1 == ragged_row) v.pop_back();
                    rows.push_back(v);
                }
                mats.push_back(rows);
            }
            res.set_content(json{{"dim", declared_dim ? declared_dim : dim}, {"matrices", mats}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EchoEmbedServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

    static constexpr std::size_t kMaxTokens = 32;
    std::atomic<int> hits{0};

private:
    HashEmbedder hash_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

bool all_finite(const TokenMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (double v : m.row(r))
            if (!std::isfinite(v)) return false;
    return true;
}

/// Client-side wire contract: shape, determinism, dimension consistency and
/// truncation of long inputs. Runs against any live endpoint.
void check_embed_contract(const std::string& endpoint, std::size_t expected_dim) {
    RemoteEmbedder client({endpoint, expected_dim});
    auto batch = client.embed_batch({"a", "a", "hello world", "The people, of Sauri."});
    ASSERT_EQ(batch.size(), 4u);
    const auto d = client.dim();
    ASSERT_GT(d, 0u);
    if (expected_dim) EXPECT_EQ(d, expected_dim);
    EXPECT_EQ(batch[0], batch[1]);
    EXPECT_GE(batch[2].rows(), 2u);
    for (const auto& m : batch) {
        EXPECT_EQ(m.cols(), d);
        EXPECT_GE(m.rows(), 1u);
        EXPECT_TRUE(all_finite(m));
    }
    EXPECT_EQ(client.embed("hello world"), batch[2]);

    std::string long_text;
    for (int i = 0; i < 5000; ++i) long_text += "word" + std::to_string(i % 97) + " ";
    auto truncated = client.embed(long_text);
    EXPECT_EQ(truncated.cols(), d);
    EXPECT_GE(truncated.rows(), 1u);
    EXPECT_LT(truncated.rows(), 5000u);
}

}  // namespace

TEST(Tokenize, Rules) {
    EXPECT_EQ(tokenize("The people, of Sauri."), (std::vector<std::string>{"the", "people", "of", "sauri"}));
    EXPECT_EQ(tokenize(""), (std::vector<std::string>{"<empty>"}));
    EXPECT_EQ(tokenize(" ... "), (std::vector<std::string>{"<empty>"}));
    EXPECT_EQ(tokenize("a  b"), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(tokenize("\"Don't\" stop!"), (std::vector<std::string>{"don't", "stop"}));
}

TEST(HashEmbedder, MatchesTheDocumentedExpansion) {
    HashEmbedder e(5);
    std::vector<double> v(5);
    e.token_vector("sauri", v);
    std::uint64_t state = fnv1a64("sauri");
    for (int k = 0; k < 5; ++k) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        EXPECT_EQ(v[k], 2.0 * static_cast<double>(state >> 11) * 0x1.0p-53 - 1.0);
    }
}

TEST(HashEmbedder, Properties) {
    HashEmbedder e(16);
    auto m = e.embed("a a b");
    ASSERT_EQ(m.rows(), 3u);
    ASSERT_EQ(m.cols(), 16u);
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(m(0, c), m(1, c));
    EXPECT_NE(m(0, 0), m(2, 0));
    EXPECT_EQ(e.embed("a a b"), m);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double norm2 = 0;
        for (double v : m.row(r)) {
            EXPECT_GE(v, -1.0);
            EXPECT_LT(v, 1.0);
            norm2 += v * v;
        }
        EXPECT_LE(std::sqrt(norm2), 4.0);
    }
    EXPECT_EQ(e.embed("").rows(), 1u);
    EXPECT_THROW(HashEmbedder(0), ConfigError);
}

TEST(HashEmbedder, FrozenGolden) {
    EXPECT_EQ(hex64(fnv1a64("the")), "56f5c9194461d57c");
    HashEmbedder e(1);
    std::vector<double> v(1);
    e.token_vector("the", v);
    EXPECT_DOUBLE_EQ(v[0], -0.43042218937138066);
}

TEST(EmbedResponse, ParsesAndRejectsBadShapes) {
    auto ok = parse_embed_response(R"({"dim":2,"matrices":[[[1,2],[3,4]],[[5,6]]]})", 2, 2);
    ASSERT_EQ(ok.size(), 2u);
    EXPECT_EQ(ok[0].rows(), 2u);
    EXPECT_EQ(ok[1](0, 1), 6.0);
    EXPECT_THROW(parse_embed_response("nope", 1, 0), EmbedError);
    EXPECT_THROW(parse_embed_response(R"({"matrices":[]})", 0, 0), EmbedError);
    EXPECT_THROW(parse_embed_response(R"({"dim":3,"matrices":[[[1,2,3]]]})", 1, 2), ContractError);
    EXPECT_THROW(parse_embed_response(R"({"dim":2,"matrices":[[[1,2]]]})", 2, 2), EmbedError);
    EXPECT_THROW(parse_embed_response(R"({"dim":2,"matrices":[[[1]]]})", 1, 2), ContractError);
    EXPECT_THROW(parse_embed_response(R"({"dim":2,"matrices":[[]]})", 1, 2), EmbedError);
    EXPECT_THROW(parse_embed_response(R"({"dim":1,"matrices":[[["x"]]]})", 1, 1), EmbedError);
}

TEST(RemoteEmbedder, ContractAgainstEchoService) {
    EchoEmbedServer server(8);
    check_embed_contract(server.endpoint(), 8);
    RemoteEmbedder learn_dim({server.endpoint(), 0});
    EXPECT_EQ(learn_dim.embed("x").cols(), 8u);
    EXPECT_EQ(learn_dim.dim(), 8u);
}

TEST(RemoteEmbedder, BatchesPreserveOrder) {
    EchoEmbedServer server(8);
    RemoteEmbedConfig cfg{server.endpoint(), 8};
    cfg.batch_size = 3;
    RemoteEmbedder client(cfg);
    HashEmbedder local(8);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));
    auto out = client.embed_batch(texts);
    ASSERT_EQ(out.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(out[i], local.embed(texts[i]));
    EXPECT_EQ(server.hits.load(), 4);
}

TEST(RemoteEmbedder, DimensionMismatchIsAContractError) {
    EchoEmbedServer server(8);
    RemoteEmbedder client({server.endpoint(), 16});
    EXPECT_THROW(client.embed("x"), ContractError);
    EchoEmbedServer liar(8, 9);
    RemoteEmbedder trusting({liar.endpoint(), 0});
    EXPECT_THROW(trusting.embed("x"), ContractError);
    EchoEmbedServer ragged(8, 0, 2);
    RemoteEmbedder strict({ragged.endpoint(), 8});
    EXPECT_THROW(strict.embed("two tokens"), ContractError);
}

TEST(RemoteEmbedder, TransportAndStatusErrors) {
    RemoteEmbedder nowhere({"http://127.0.0.1:1/embed", 8, 32, 2, 2});
    EXPECT_THROW(nowhere.embed("x"), EmbedError);
    EchoEmbedServer server(8);
    RemoteEmbedConfig cfg{server.endpoint(), 8};
    cfg.batch_size = 100;
    RemoteEmbedder oversized(cfg);
    EXPECT_THROW(oversized.embed_batch(std::vector<std::string>(70, "x")), EmbedError);
    EXPECT_THROW(RemoteEmbedder({"localhost:8000/embed"}), ConfigError);
}

TEST(RemoteEmbedder, LiveServiceContract) {
    const char* endpoint = std::getenv("ARQ_EMBED_ENDPOINT");
    if (!endpoint || !*endpoint) GTEST_SKIP() << "set ARQ_EMBED_ENDPOINT to check a running embedding service";
    check_embed_contract(endpoint, 0);
}
