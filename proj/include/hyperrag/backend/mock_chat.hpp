#pragma once

#include "hyperrag/backend/chat.hpp"

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hyperrag {

/// Surface phrase -> type, matched on folded word sequences.
class MockLexicon {
public:
    void add(std::string_view surface, std::string_view type);
    /// Collects every `[surface](type)` annotation in `text`.
    void harvest(std::string_view text);

    struct Match {
        std::string surface;
        std::string type;
    };
    /// Non-overlapping matches in order of appearance; longest phrase wins.
    std::vector<Match> find_all(std::string_view text) const;

    std::size_t size() const noexcept { return phrases_.size(); }
    bool empty() const noexcept { return phrases_.empty(); }

private:
    std::map<std::vector<std::string>, std::pair<std::string, std::string>> phrases_; // words -> (surface, type)
    std::size_t longest_ = 0;
};

/// Query annotations consumed by the search-word and feature-extraction templates.
struct ScriptedFeature {
    std::string text;
    double usefulness = 0.0;
    std::string entity; // emitted by the package holding a topic with this anchor...
    std::string label;  // ...and this label
};

struct ScriptedQuery {
    std::string question;
    std::vector<std::string> terms;
    std::vector<ScriptedFeature> features;
};

/// Deterministic offline chat backend driven by fixture annotations. Output
/// is a pure function of (template, bindings, seed, script).
///
/// Fixture markup understood:
///   `[surface](type)`             an entity or keyword mention
///   `<<label|keyword: sentence>>` an evidence statement for (keyword, label)
class MockChatBackend final : public ChatBackend {
public:
    explicit MockChatBackend(MockLexicon lexicon = {}, std::uint64_t seed = 0);

    void add_query(ScriptedQuery query);
    const MockLexicon& lexicon() const noexcept { return lexicon_; }
    std::string model_name() const override { return "mock"; }

    /// Strips `[surface](type)` markup, keeping the surface text.
    static std::string strip_markup(std::string_view text);

protected:
    ChatReply do_chat(const ChatRequest& request, const std::string& prompt) override;

private:
    std::string keywords(const ChatRequest& r) const;
    std::string evidence(const ChatRequest& r) const;
    std::string entities(const ChatRequest& r) const;
    std::string summary(const ChatRequest& r) const;
    std::string merge(const ChatRequest& r) const;
    std::string search_words(const ChatRequest& r) const;
    std::string features(const ChatRequest& r) const;
    std::string answer(const ChatRequest& r) const;
    const ScriptedQuery* find_query(const std::string& question) const;

    MockLexicon lexicon_;
    std::uint64_t seed_;
    std::map<std::string, ScriptedQuery> queries_; // keyed by folded question
};

/// Replays queued replies or errors in order and records every request;
/// used for golden-transcript tests of each template's parser.
class ScriptedChatBackend final : public ChatBackend {
public:
    void push_reply(std::string text);
    void push_error(ErrorCode code);

    std::vector<ChatRequest> requests() const;
    std::size_t pending() const;
    std::string model_name() const override { return "scripted"; }

protected:
    ChatReply do_chat(const ChatRequest& request, const std::string& prompt) override;

private:
    mutable std::mutex mu_;
    std::deque<std::variant<std::string, ErrorCode>> queue_;
    std::vector<ChatRequest> seen_;
};

/// Wraps a backend and fails selected calls: the first `fail_first` calls, or
/// every call whose bindings contain `poison` as a substring.
class FaultInjectingChat final : public ChatBackend {
public:
    struct Plan {
        std::size_t fail_first = 0;
        bool fail_all = false;
        std::string poison;
        ErrorCode code = ErrorCode::Unavailable;
    };

    FaultInjectingChat(ChatBackend& inner, Plan plan) : inner_(inner), plan_(std::move(plan)) {}
    std::string model_name() const override { return inner_.model_name(); }
    std::size_t failures() const noexcept { return failures_; }

protected:
    ChatReply do_chat(const ChatRequest& request, const std::string& prompt) override;

private:
    ChatBackend& inner_;
    Plan plan_;
    std::atomic<std::size_t> seen_{0};
    std::atomic<std::size_t> failures_{0};
};

} // namespace hyperrag
