#pragma once

// Context construction for revision-quality classification.
//
// Two location baselines are built per revision from the aligned drafts:
//   BaseShort - the aligned neighbors immediately before and after;
//   BaseLong  - every changed neighbor reachable without crossing an
//               unchanged pair.
// Three argumentative contexts (claim, reasoning, evidence) are generated per
// essay draft by a chat model, either with one summarize prompt or with a
// list-then-summarize chain in a single conversation.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "arq/align.hpp"
#include "arq/corpus.hpp"
#include "arq/llm_client.hpp"

namespace arq {

enum class ContextKind { BaseShort, BaseLong, AcClaim, AcReasoning, AcEvidence };
enum class PromptStrategy { Single, CoT };

std::string_view name(ContextKind k);
std::string_view name(PromptStrategy s);
template <> std::optional<ContextKind> try_parse<ContextKind>(std::string_view s);
template <> std::optional<PromptStrategy> try_parse<PromptStrategy>(std::string_view s);

bool is_generated(ContextKind k);

/// The [X] slot word for a generated kind: "claim", "reasoning" or "evidence".
std::string_view slot_word(ContextKind k);

/// An experimental condition: a context kind plus, for generated kinds, the
/// prompt strategy. Written as "base-short", "base-long", "ac-claim:single",
/// "ac-reasoning:cot", ...
struct Condition {
    ContextKind kind = ContextKind::BaseLong;
    std::optional<PromptStrategy> strategy;

    static Condition parse(std::string_view text);
    std::string label() const;
    auto operator<=>(const Condition&) const = default;
};

std::vector<Condition> parse_conditions(std::string_view comma_separated);

/// All eight conditions of the full comparison, baselines first.
std::vector<Condition> all_conditions();

struct ArgContext {
    std::string essay_id;
    DraftSide side = DraftSide::Revised;
    ContextKind kind = ContextKind::BaseShort;
    std::optional<PromptStrategy> strategy;
    std::optional<int> seed_run;                 ///< generated kinds only
    std::optional<std::size_t> alignment_index;  ///< location kinds only
    std::string text;
    std::vector<llm::ChatMessage> transcript;

    bool operator==(const ArgContext&) const = default;
};

std::string base_short(const DraftPair& draft, const std::vector<AlignedPair>& pairs, std::size_t target);
std::string base_long(const DraftPair& draft, const std::vector<AlignedPair>& pairs, std::size_t target);

/// Both location contexts for every changed pair of one essay.
std::vector<ArgContext> build_base_contexts(const DraftPair& draft, const std::vector<AlignedPair>& pairs);

std::string render_single_prompt(ContextKind kind, std::string_view essay_text);
std::pair<std::string, std::string> render_cot_prompts(ContextKind kind, std::string_view essay_text);

struct GenerationConfig {
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 1.0;
    int max_tokens = 256;
    int max_reasks = 2;
};

/// Runs the prompt chain, re-asks (by repeating the final prompt in the same
/// conversation) while the reply is not exactly two sentences, then keeps the
/// first two sentences of the last reply.
ArgContext generate_ac(const DraftPair& essay, DraftSide side, ContextKind kind, PromptStrategy strategy,
                       llm::ChatClient& client, const GenerationConfig& cfg = {}, int seed_run = 0);

/// Every context known to a run, keyed for lookup by revision.
class ContextStore {
public:
    void insert(ArgContext ctx);
    const ArgContext* find_generated(const std::string& essay_id, DraftSide side, ContextKind kind,
                                     PromptStrategy strategy, int seed_run) const;
    const ArgContext* find_location(const std::string& essay_id, std::size_t alignment_index, ContextKind kind) const;

    std::size_t size() const { return items_.size(); }
    const std::vector<ArgContext>& items() const { return items_; }

    void write(std::ostream& out) const;
    static ContextStore parse(std::istream& in);
    static ContextStore load(const std::filesystem::path& path);

private:
    using GenKey = std::tuple<std::string, DraftSide, ContextKind, PromptStrategy, int>;
    using LocKey = std::tuple<std::string, std::size_t, ContextKind>;
    std::vector<ArgContext> items_;
    std::map<GenKey, std::size_t> generated_;
    std::map<LocKey, std::size_t> location_;
};

/// Generates the contexts needed by `conditions` for every essay, both draft
/// sides where non-empty, and every seed run. Contexts already in `store`
/// are reused. Up to `workers` essays are processed concurrently.
void generate_contexts(const std::vector<DraftPair>& corpus, const std::vector<Condition>& conditions,
                       int seed_runs, llm::ChatClient& client, const GenerationConfig& cfg, ContextStore& store,
                       int workers = 1);

/// Offline extractive responder for the context prompts: answers with essay
/// sentences that contain cue phrases for the requested kind.
class HeuristicProvider : public llm::ChatProvider {
public:
    llm::ChatMessage send(const llm::ChatRequest& req, int seed_run) override;
};

std::string heuristic_reply(const std::vector<llm::ChatMessage>& messages);

}  // namespace arq
