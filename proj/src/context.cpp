#include "arq/context.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <ostream>
#include <thread>

#include "arq/error.hpp"
#include "jsonl.hpp"

namespace arq {

using detail::json;
using llm::ChatMessage;
using llm::Role;

std::string_view name(ContextKind k) {
    switch (k) {
        case ContextKind::BaseShort: return "base_short";
        case ContextKind::BaseLong: return "base_long";
        case ContextKind::AcClaim: return "ac_claim";
        case ContextKind::AcReasoning: return "ac_reasoning";
        case ContextKind::AcEvidence: return "ac_evidence";
    }
    return "?";
}

std::string_view name(PromptStrategy s) { return s == PromptStrategy::Single ? "single" : "cot"; }

template <> std::optional<ContextKind> try_parse<ContextKind>(std::string_view s) {
    for (auto k : {ContextKind::BaseShort, ContextKind::BaseLong, ContextKind::AcClaim, ContextKind::AcReasoning,
                   ContextKind::AcEvidence})
        if (name(k) == s) return k;
    return std::nullopt;
}

template <> std::optional<PromptStrategy> try_parse<PromptStrategy>(std::string_view s) {
    if (s == "single") return PromptStrategy::Single;
    if (s == "cot") return PromptStrategy::CoT;
    return std::nullopt;
}

bool is_generated(ContextKind k) { return k != ContextKind::BaseShort && k != ContextKind::BaseLong; }

std::string_view slot_word(ContextKind k) {
    switch (k) {
        case ContextKind::AcClaim: return "claim";
        case ContextKind::AcReasoning: return "reasoning";
        case ContextKind::AcEvidence: return "evidence";
        default: break;
    }
    throw ContractError("no prompt slot for location context '" + std::string(name(k)) + "'");
}

Condition Condition::parse(std::string_view text) {
    std::string s(text);
    std::optional<PromptStrategy> strategy;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        strategy = try_parse<PromptStrategy>(s.substr(colon + 1));
        if (!strategy) throw ConfigError("unknown prompt strategy in condition '" + s + "'");
        s.resize(colon);
    }
    std::replace(s.begin(), s.end(), '-', '_');
    auto kind = try_parse<ContextKind>(s);
    if (!kind) throw ConfigError("unknown context kind in condition '" + std::string(text) + "'");
    if (is_generated(*kind) && !strategy)
        throw ConfigError("condition '" + std::string(text) + "' needs a strategy (:single or :cot)");
    if (!is_generated(*kind) && strategy)
        throw ConfigError("location condition '" + std::string(text) + "' takes no strategy");
    return {*kind, strategy};
}

std::string Condition::label() const {
    std::string s(name(kind));
    std::replace(s.begin(), s.end(), '_', '-');
    if (strategy) s += ":" + std::string(name(*strategy));
    return s;
}

std::vector<Condition> parse_conditions(std::string_view comma_separated) {
    std::vector<Condition> out;
    std::size_t start = 0;
    while (start <= comma_separated.size()) {
        auto end = comma_separated.find(',', start);
        if (end == std::string_view::npos) end = comma_separated.size();
        auto item = comma_separated.substr(start, end - start);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
        if (!item.empty()) {
            auto c = Condition::parse(item);
            if (std::find(out.begin(), out.end(), c) != out.end())
                throw ConfigError("condition '" + c.label() + "' listed twice");
            out.push_back(c);
        }
        start = end + 1;
    }
    if (out.empty()) throw ConfigError("no conditions given");
    return out;
}

std::vector<Condition> all_conditions() {
    std::vector<Condition> out{{ContextKind::BaseShort, std::nullopt}, {ContextKind::BaseLong, std::nullopt}};
    for (auto k : {ContextKind::AcClaim, ContextKind::AcReasoning, ContextKind::AcEvidence})
        for (auto s : {PromptStrategy::Single, PromptStrategy::CoT}) out.push_back({k, s});
    return out;
}

// ---------------------------------------------------------------- location

namespace {

struct LocationTarget {
    DraftSide side;
    const std::vector<Sentence>* sents;
};

LocationTarget check_target(const DraftPair& draft, const std::vector<AlignedPair>& pairs, std::size_t target) {
    if (target >= pairs.size())
        throw IndexError("target " + std::to_string(target) + " out of range for " + std::to_string(pairs.size()) +
                         " aligned pairs");
    const auto& p = pairs[target];
    if (p.op == RevisionOp::NoChange) throw ContractError("location context requested for an unchanged pair");
    auto side = p.op == RevisionOp::Delete ? DraftSide::Original : DraftSide::Revised;
    return {side, &sentences(draft, side)};
}

const std::string* side_text(const LocationTarget& t, const AlignedPair& p) {
    const auto& idx = t.side == DraftSide::Original ? p.orig_index : p.rev_index;
    if (!idx) return nullptr;
    return &t.sents->at(*idx).text;
}

void append(std::string& out, const std::string& s) {
    if (!out.empty()) out += ' ';
    out += s;
}

}  // namespace

std::string base_short(const DraftPair& draft, const std::vector<AlignedPair>& pairs, std::size_t target) {
    auto t = check_target(draft, pairs, target);
    std::string out;
    if (target > 0)
        if (auto* s = side_text(t, pairs[target - 1])) append(out, *s);
    if (target + 1 < pairs.size())
        if (auto* s = side_text(t, pairs[target + 1])) append(out, *s);
    return out;
}

std::string base_long(const DraftPair& draft, const std::vector<AlignedPair>& pairs, std::size_t target) {
    auto t = check_target(draft, pairs, target);
    std::size_t lo = target;
    while (lo > 0 && pairs[lo - 1].op != RevisionOp::NoChange) --lo;
    std::size_t hi = target;
    while (hi + 1 < pairs.size() && pairs[hi + 1].op != RevisionOp::NoChange) ++hi;
    std::string out;
    for (std::size_t k = lo; k <= hi; ++k) {
        if (k == target) continue;
        if (auto* s = side_text(t, pairs[k])) append(out, *s);
    }
    return out;
}

std::vector<ArgContext> build_base_contexts(const DraftPair& draft, const std::vector<AlignedPair>& pairs) {
    std::vector<ArgContext> out;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].op == RevisionOp::NoChange) continue;
        auto side = pairs[k].op == RevisionOp::Delete ? DraftSide::Original : DraftSide::Revised;
        out.push_back({draft.essay_id, side, ContextKind::BaseShort, std::nullopt, std::nullopt, k,
                       base_short(draft, pairs, k), {}});
        out.push_back({draft.essay_id, side, ContextKind::BaseLong, std::nullopt, std::nullopt, k,
                       base_long(draft, pairs, k), {}});
    }
    return out;
}

// ---------------------------------------------------------------- prompts

std::string render_single_prompt(ContextKind kind, std::string_view essay_text) {
    return "please summarize " + std::string(slot_word(kind)) + " in the essay " + std::string(essay_text) +
           " in two sentences";
}

std::pair<std::string, std::string> render_cot_prompts(ContextKind kind, std::string_view essay_text) {
    const std::string x(slot_word(kind));
    return {"please list " + x + " sentences in the essay " + std::string(essay_text),
            "please summarize " + x + " sentences in two sentences"};
}

// ---------------------------------------------------------------- generation

namespace {

std::string join_sentences(const std::vector<Sentence>& s, std::size_t limit) {
    std::string out;
    for (std::size_t i = 0; i < s.size() && i < limit; ++i) append(out, s[i].text);
    return out;
}

}  // namespace

ArgContext generate_ac(const DraftPair& essay, DraftSide side, ContextKind kind, PromptStrategy strategy,
                       llm::ChatClient& client, const GenerationConfig& cfg, int seed_run) {
    if (!is_generated(kind)) throw ContractError("generate_ac needs an argumentative context kind");
    if (sentences(essay, side).empty())
        throw ContractError("essay '" + essay.essay_id + "' has an empty " + std::string(name(side)) + " draft");
    const auto text = draft_text(essay, side);

    llm::ChatRequest req;
    req.model_id = cfg.model_id;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;

    auto ask = [&](const std::string& prompt) -> std::string {
        req.messages.push_back({Role::User, prompt});
        ChatMessage reply;
        try {
            reply = client.complete(req, seed_run);
        } catch (const TransportError& e) {
            throw GenerationError("essay '" + essay.essay_id + "': " + e.what());
        } catch (const ProviderError& e) {
            throw GenerationError("essay '" + essay.essay_id + "': " + e.what());
        }
        if (segment_text(reply.content).empty())
            throw GenerationError("essay '" + essay.essay_id + "': empty reply to \"" + prompt.substr(0, 40) + "...\"");
        req.messages.push_back({Role::Assistant, reply.content});
        return reply.content;
    };

    std::string final_prompt;
    if (strategy == PromptStrategy::Single) {
        final_prompt = render_single_prompt(kind, text);
    } else {
        auto [list_prompt, summarize_prompt] = render_cot_prompts(kind, text);
        ask(list_prompt);
        final_prompt = std::move(summarize_prompt);
    }

    auto segs = segment_text(ask(final_prompt));
    for (int i = 0; i < cfg.max_reasks && segs.size() != 2; ++i) segs = segment_text(ask(final_prompt));

    ArgContext ctx;
    ctx.essay_id = essay.essay_id;
    ctx.side = side;
    ctx.kind = kind;
    ctx.strategy = strategy;
    ctx.seed_run = seed_run;
    ctx.text = join_sentences(segs, 2);
    ctx.transcript = std::move(req.messages);
    return ctx;
}

// ---------------------------------------------------------------- store

void ContextStore::insert(ArgContext ctx) {
    const auto pos = items_.size();
    if (is_generated(ctx.kind)) {
        if (!ctx.strategy || !ctx.seed_run) throw ValidationError("generated context without strategy or seed_run");
        GenKey key{ctx.essay_id, ctx.side, ctx.kind, *ctx.strategy, *ctx.seed_run};
        if (auto it = generated_.find(key); it != generated_.end()) {
            items_[it->second] = std::move(ctx);
            return;
        }
        generated_.emplace(std::move(key), pos);
    } else {
        if (!ctx.alignment_index) throw ValidationError("location context without alignment_index");
        LocKey key{ctx.essay_id, *ctx.alignment_index, ctx.kind};
        if (auto it = location_.find(key); it != location_.end()) {
            items_[it->second] = std::move(ctx);
            return;
        }
        location_.emplace(std::move(key), pos);
    }
    items_.push_back(std::move(ctx));
}

const ArgContext* ContextStore::find_generated(const std::string& essay_id, DraftSide side, ContextKind kind,
                                               PromptStrategy strategy, int seed_run) const {
    auto it = generated_.find(GenKey{essay_id, side, kind, strategy, seed_run});
    return it == generated_.end() ? nullptr : &items_[it->second];
}

const ArgContext* ContextStore::find_location(const std::string& essay_id, std::size_t alignment_index,
                                              ContextKind kind) const {
    auto it = location_.find(LocKey{essay_id, alignment_index, kind});
    return it == location_.end() ? nullptr : &items_[it->second];
}

void ContextStore::write(std::ostream& out) const {
    for (const auto& c : items_) {
        json transcript = json::array();
        for (const auto& m : c.transcript) transcript.push_back({{"role", llm::name(m.role)}, {"content", m.content}});
        json rec{{"essay_id", c.essay_id},
                 {"side", name(c.side)},
                 {"kind", name(c.kind)},
                 {"strategy", detail::opt_name(c.strategy)},
                 {"seed_run", detail::opt_json(c.seed_run)},
                 {"alignment_index", detail::opt_json(c.alignment_index)},
                 {"text", c.text},
                 {"transcript", transcript}};
        out << rec.dump() << '\n';
    }
}

ContextStore ContextStore::parse(std::istream& in) {
    ContextStore store;
    detail::for_each_record(in, [&](const json& rec, std::size_t line_no) {
        ArgContext c;
        c.essay_id = detail::get_string(rec, "essay_id", line_no);
        c.side = detail::get_enum<DraftSide>(rec, "side", line_no);
        c.kind = detail::get_enum<ContextKind>(rec, "kind", line_no);
        c.strategy = detail::get_opt_enum<PromptStrategy>(rec, "strategy", line_no);
        if (auto it = rec.find("seed_run"); it != rec.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw ParseError("seed_run is not an integer", line_no);
            c.seed_run = it->get<int>();
        }
        c.alignment_index = detail::get_opt_index(rec, "alignment_index", line_no);
        c.text = detail::get_string(rec, "text", line_no);
        if (auto it = rec.find("transcript"); it != rec.end() && it->is_array()) {
            for (const auto& m : *it) {
                auto role = llm::parse_role(m.value("role", ""));
                if (!role || !m.contains("content")) throw ParseError("malformed transcript entry", line_no);
                c.transcript.push_back({*role, m.at("content").get<std::string>()});
            }
        }
        if (is_generated(c.kind) != c.strategy.has_value())
            throw ParseError("strategy must be set exactly for generated kinds", line_no);
        try {
            store.insert(std::move(c));
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
    });
    return store;
}

ContextStore ContextStore::load(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse(in);
}

void generate_contexts(const std::vector<DraftPair>& corpus, const std::vector<Condition>& conditions,
                       int seed_runs, llm::ChatClient& client, const GenerationConfig& cfg, ContextStore& store,
                       int workers) {
    struct Job {
        const DraftPair* essay;
        DraftSide side;
        ContextKind kind;
        PromptStrategy strategy;
        int seed_run;
    };
    std::vector<std::vector<Job>> per_essay(corpus.size());
    for (std::size_t e = 0; e < corpus.size(); ++e)
        for (const auto& c : conditions) {
            if (!is_generated(c.kind)) continue;
            for (auto side : {DraftSide::Original, DraftSide::Revised}) {
                if (sentences(corpus[e], side).empty()) continue;
                for (int s = 0; s < seed_runs; ++s)
                    if (!store.find_generated(corpus[e].essay_id, side, c.kind, *c.strategy, s))
                        per_essay[e].push_back({&corpus[e], side, c.kind, *c.strategy, s});
            }
        }

    std::vector<std::vector<ArgContext>> results(corpus.size());
    std::vector<std::exception_ptr> errors(corpus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t e; (e = next++) < corpus.size();) {
            try {
                for (const auto& j : per_essay[e])
                    results[e].push_back(generate_ac(*j.essay, j.side, j.kind, j.strategy, client, cfg, j.seed_run));
            } catch (...) {
                errors[e] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, workers);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
    for (auto& batch : results)
        for (auto& ctx : batch) store.insert(std::move(ctx));
}

// ---------------------------------------------------------------- offline responder

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
    return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> cues_for(std::string_view slot) {
    if (slot == "claim") return {"i believe", "i think", "in my opinion", "i argue", "my claim"};
    if (slot == "reasoning") return {"because", "this shows", "this means", "therefore", "which means"};
    if (slot == "evidence") return {"according to", "the text says", "for example", "the article", "in the text"};
    return {};
}

std::vector<std::string> cue_sentences(std::string_view text, std::string_view slot) {
    std::vector<std::string> out;
    const auto cues = cues_for(slot);
    for (const auto& s : segment_text(text)) {
        auto l = lower(s.text);
        for (auto cue : cues)
            if (l.find(cue) != std::string::npos) {
                out.push_back(s.text);
                break;
            }
    }
    return out;
}

std::string terminated(std::string s) {
    if (!s.empty() && s.back() != '.' && s.back() != '!' && s.back() != '?') s += '.';
    return s;
}

// First two of `picked`, padded with the essay's leading sentences.
std::string two_sentences(std::vector<std::string> picked, std::string_view essay) {
    for (const auto& s : segment_text(essay)) {
        if (picked.size() >= 2) break;
        if (std::find(picked.begin(), picked.end(), s.text) == picked.end()) picked.push_back(s.text);
    }
    std::string out;
    for (std::size_t i = 0; i < picked.size() && i < 2; ++i) append(out, terminated(picked[i]));
    return out;
}

}  // namespace

std::string heuristic_reply(const std::vector<ChatMessage>& messages) {
    const ChatMessage* last_user = nullptr;
    const ChatMessage* first_user = nullptr;
    const ChatMessage* last_assistant = nullptr;
    for (const auto& m : messages) {
        if (m.role == Role::User) {
            if (!first_user) first_user = &m;
            last_user = &m;
        } else if (m.role == Role::Assistant) {
            last_assistant = &m;
        }
    }
    if (!last_user) return "There is nothing to answer.";
    std::string_view p = last_user->content;

    constexpr std::string_view kSummarize = "please summarize ";
    constexpr std::string_view kList = "please list ";
    constexpr std::string_view kInEssay = " in the essay ";
    constexpr std::string_view kListTail = " sentences in the essay ";
    constexpr std::string_view kTwo = " in two sentences";
    constexpr std::string_view kFollowUp = " sentences in two sentences";

    if (starts_with(p, kSummarize) && ends_with(p, kFollowUp) && p.find(kInEssay) == std::string_view::npos) {
        std::string_view essay;
        if (first_user && starts_with(first_user->content, kList)) {
            std::string_view f = first_user->content;
            if (auto at = f.find(kListTail); at != std::string_view::npos) essay = f.substr(at + kListTail.size());
        }
        std::vector<std::string> listed;
        if (last_assistant)
            for (const auto& s : segment_text(last_assistant->content)) listed.push_back(s.text);
        return two_sentences(std::move(listed), essay);
    }
    if (starts_with(p, kSummarize) && ends_with(p, kTwo)) {
        auto body = p.substr(kSummarize.size(), p.size() - kSummarize.size() - kTwo.size());
        auto at = body.find(kInEssay);
        if (at != std::string_view::npos) {
            auto slot = body.substr(0, at);
            auto essay = body.substr(at + kInEssay.size());
            return two_sentences(cue_sentences(essay, slot), essay);
        }
    }
    if (starts_with(p, kList)) {
        auto at = p.find(kListTail);
        if (at != std::string_view::npos) {
            auto slot = p.substr(kList.size(), at - kList.size());
            auto essay = p.substr(at + kListTail.size());
            auto found = cue_sentences(essay, slot);
            if (found.empty()) {
                auto all = segment_text(essay);
                if (!all.empty()) found.push_back(all.front().text);
            }
            std::string out;
            for (const auto& s : found) {
                if (!out.empty()) out += '\n';
                out += terminated(s);
            }
            return out;
        }
    }
    return "I can only answer the context prompts.";
}

llm::ChatMessage HeuristicProvider::send(const llm::ChatRequest& req, int) {
    return {Role::Assistant, heuristic_reply(req.messages)};
}

}  // namespace arq
