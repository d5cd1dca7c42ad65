#include "hyperrag/backend/mock_chat.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/text.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

namespace hyperrag {

using nlohmann::json;

namespace {

const std::regex& mention_re() {
    static const std::regex re(R"(\[([^\]\[]+)\]\(([A-Za-z ]+)\))");
    return re;
}

const std::regex& evidence_re() {
    static const std::regex re(R"(<<([^|<>]+)\|([^:<>]+):\s*([^<>]*?)\s*>>)");
    return re;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> s{
        "a",     "an",    "and",  "are",   "as",    "at",    "be",    "by",   "can",  "does", "for",
        "from",  "has",   "have", "how",   "in",    "is",    "it",    "its",  "of",   "on",   "or",
        "should", "that", "the",  "their", "there", "these", "this",  "to",   "was",  "what", "when",
        "which", "while", "who",  "why",   "will",  "with",  "would", "patient", "patients", "taking",
        "about", "used",  "use",  "any",   "known", "given", "than",  "into", "also", "other"};
    return s;
}

std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& w : text::words(s)) {
        if (w.size() >= 4 && !stopwords().contains(w)) out.push_back(std::move(w));
    }
    return out;
}

ChatReply make_reply(const std::string& prompt, std::string text) {
    ChatReply r;
    r.usage.prompt_tokens = text::word_count(prompt);
    r.usage.completion_tokens = text::word_count(text);
    r.usage.calls = 1;
    r.usage.attempts = 1;
    r.text = std::move(text);
    return r;
}

const std::string& binding(const ChatRequest& r, const std::string& name) {
    return r.bindings.at(name);
}

std::string capitalized(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string first_words(std::string_view s, std::size_t n) {
    const auto spans = text::tokenize(s, text::TokenizerMode::Whitespace);
    if (spans.empty()) return {};
    const auto& last = spans[std::min(n, spans.size()) - 1];
    return std::string(s.substr(spans.front().begin, last.end - spans.front().begin));
}

} // namespace

// --- lexicon -----------------------------------------------------------------

void MockLexicon::add(std::string_view surface, std::string_view type) {
    auto key = text::words(surface);
    if (key.empty()) return;
    longest_ = std::max(longest_, key.size());
    phrases_.try_emplace(std::move(key), text::trim(surface), text::fold(type));
}

void MockLexicon::harvest(std::string_view input) {
    const std::string s(input);
    for (std::sregex_iterator it(s.begin(), s.end(), mention_re()), end; it != end; ++it) {
        add((*it)[1].str(), (*it)[2].str());
    }
}

std::vector<MockLexicon::Match> MockLexicon::find_all(std::string_view input) const {
    std::vector<Match> out;
    const auto ws = text::words(input);
    std::size_t i = 0;
    while (i < ws.size()) {
        bool matched = false;
        for (std::size_t len = std::min(longest_, ws.size() - i); len > 0; --len) {
            std::vector<std::string> key(ws.begin() + static_cast<std::ptrdiff_t>(i),
                                         ws.begin() + static_cast<std::ptrdiff_t>(i + len));
            if (const auto it = phrases_.find(key); it != phrases_.end()) {
                out.push_back({it->second.first, it->second.second});
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return out;
}

// --- fixture-driven mock -----------------------------------------------------

MockChatBackend::MockChatBackend(MockLexicon lexicon, std::uint64_t seed)
    : lexicon_(std::move(lexicon)), seed_(seed) {}

void MockChatBackend::add_query(ScriptedQuery query) {
    queries_[text::fold(query.question)] = std::move(query);
}

const ScriptedQuery* MockChatBackend::find_query(const std::string& question) const {
    const auto it = queries_.find(text::fold(question));
    return it == queries_.end() ? nullptr : &it->second;
}

std::string MockChatBackend::strip_markup(std::string_view input) {
    return std::regex_replace(std::string(input), mention_re(), "$1");
}

ChatReply MockChatBackend::do_chat(const ChatRequest& r, const std::string& prompt) {
    switch (r.template_id) {
    case TemplateId::KeywordExtraction: return make_reply(prompt, keywords(r));
    case TemplateId::EvidenceExtraction: return make_reply(prompt, evidence(r));
    case TemplateId::EntityExtraction: return make_reply(prompt, entities(r));
    case TemplateId::TopicSummary: return make_reply(prompt, summary(r));
    case TemplateId::TopicMerge: return make_reply(prompt, merge(r));
    case TemplateId::SearchWords: return make_reply(prompt, search_words(r));
    case TemplateId::FeatureExtraction: return make_reply(prompt, features(r));
    case TemplateId::AnswerGeneration: return make_reply(prompt, answer(r));
    default: break;
    }
    throw Error(ErrorCode::BadResponse, "mock backend has no script for " + std::string(to_string(r.template_id)));
}

std::string MockChatBackend::keywords(const ChatRequest& r) const {
    const std::string s = binding(r, "title") + "\n" + binding(r, "abstract");
    json list = json::array();
    std::set<std::string> seen;
    for (std::sregex_iterator it(s.begin(), s.end(), mention_re()), end; it != end; ++it) {
        const std::string surface = text::trim((*it)[1].str());
        if (seen.insert(text::fold(surface)).second) {
            list.push_back({{"keyword", surface}, {"type", text::fold((*it)[2].str())}});
        }
    }
    return json{{"keywords", list}}.dump();
}

std::string MockChatBackend::evidence(const ChatRequest& r) const {
    const std::string& content = binding(r, "content");
    const std::string keyword = text::fold(binding(r, "keyword"));
    const std::string label = text::fold(binding(r, "label"));
    json list = json::array();
    for (std::sregex_iterator it(content.begin(), content.end(), evidence_re()), end; it != end; ++it) {
        if (text::fold((*it)[1].str()) == label && text::fold((*it)[2].str()) == keyword) {
            list.push_back(text::trim(strip_markup((*it)[3].str())));
        }
    }
    return json{{"evidence", list}}.dump();
}

std::string MockChatBackend::entities(const ChatRequest& r) const {
    json list = json::array();
    for (const auto& m : lexicon_.find_all(binding(r, "evidence"))) {
        list.push_back({{"name", m.surface}, {"type", m.type}});
    }
    return json{{"entities", list}}.dump();
}

std::string MockChatBackend::summary(const ChatRequest& r) const {
    std::string out = capitalized(binding(r, "label")) + " of " + binding(r, "entity") + ": ";
    std::string sep;
    const std::string& ev = binding(r, "evidence");
    std::size_t pos = 0;
    while (pos < ev.size()) {
        auto nl = ev.find('\n', pos);
        if (nl == std::string::npos) nl = ev.size();
        std::string line = text::trim(std::string_view(ev).substr(pos, nl - pos));
        if (line.starts_with("- ")) line.erase(0, 2);
        if (!line.empty()) {
            out += sep + first_words(line, 16);
            sep = "; ";
        }
        pos = nl + 1;
    }
    return out;
}

std::string MockChatBackend::merge(const ChatRequest& r) const {
    std::string out = capitalized(binding(r, "label")) + " of " + binding(r, "entity") + " (merged): ";
    const std::string& s = binding(r, "summaries");
    std::string flat;
    for (char c : s) flat.push_back(c == '\n' ? ' ' : c);
    return out + first_words(flat, 120);
}

std::string MockChatBackend::search_words(const ChatRequest& r) const {
    const std::string& query = binding(r, "query");
    std::vector<std::string> terms;
    std::set<std::string> seen;
    auto push = [&](const std::string& t) {
        if (seen.insert(text::fold(t)).second) terms.push_back(t);
    };
    if (const auto* q = find_query(query)) {
        for (const auto& t : q->terms) push(t);
    } else {
        std::set<std::string> covered;
        for (const auto& m : lexicon_.find_all(query)) {
            push(m.surface);
            for (auto& w : text::words(m.surface)) covered.insert(std::move(w));
        }
        for (const auto& w : content_words(query)) {
            if (terms.size() >= 5) break;
            if (!covered.contains(w)) push(w);
        }
    }
    return json{{"terms", terms}}.dump();
}

std::string MockChatBackend::features(const ChatRequest& r) const {
    const json topics = json::parse(binding(r, "topics"));
    json list = json::array();
    if (const auto* q = find_query(binding(r, "query"))) {
        for (const auto& f : q->features) {
            const bool here = std::any_of(topics.begin(), topics.end(), [&](const json& t) {
                return text::fold(t.value("entity", "")) == text::fold(f.entity) && t.value("label", "") == f.label;
            });
            if (here) list.push_back({{"feature", f.text}, {"usefulness", f.usefulness}});
        }
        return json{{"features", list}}.dump();
    }

    const auto qwords = content_words(binding(r, "query"));
    const std::set<std::string> qset(qwords.begin(), qwords.end());
    for (const auto& t : topics) {
        const std::string desc = t.value("description", "");
        const auto dwords = content_words(desc);
        const std::set<std::string> dset(dwords.begin(), dwords.end());
        std::size_t overlap = 0;
        for (const auto& w : qset) overlap += dset.contains(w) ? 1 : 0;
        if (overlap == 0 || qset.empty()) continue;
        const double u = std::round(10.0 * static_cast<double>(overlap) / static_cast<double>(qset.size()));
        list.push_back({{"feature", first_words(desc, 24)}, {"usefulness", u}});
    }
    return json{{"features", list}}.dump();
}

std::string MockChatBackend::answer(const ChatRequest& r) const {
    const std::string& evidence = binding(r, "evidence");
    const std::string& options = binding(r, "options");
    if (text::trim(options).empty()) return first_words(evidence, 400);

    // Options are lines "X. text"; pick the one sharing most words with the evidence.
    const auto ew = text::words(evidence);
    const std::set<std::string> eset(ew.begin(), ew.end());
    std::string best;
    std::size_t best_overlap = 0;
    std::size_t pos = 0;
    while (pos < options.size()) {
        auto nl = options.find('\n', pos);
        if (nl == std::string::npos) nl = options.size();
        const std::string line = text::trim(std::string_view(options).substr(pos, nl - pos));
        pos = nl + 1;
        const auto dot = line.find('.');
        if (line.empty() || dot == std::string::npos) continue;
        std::size_t overlap = 0;
        for (const auto& w : content_words(line.substr(dot + 1))) overlap += eset.contains(w) ? 1 : 0;
        if (best.empty() || overlap > best_overlap) {
            best = text::trim(line.substr(0, dot));
            best_overlap = overlap;
        }
    }
    return best;
}

// --- scripted replay ---------------------------------------------------------

void ScriptedChatBackend::push_reply(std::string text) {
    std::lock_guard lock(mu_);
    queue_.emplace_back(std::move(text));
}

void ScriptedChatBackend::push_error(ErrorCode code) {
    std::lock_guard lock(mu_);
    queue_.emplace_back(code);
}

std::vector<ChatRequest> ScriptedChatBackend::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

std::size_t ScriptedChatBackend::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

ChatReply ScriptedChatBackend::do_chat(const ChatRequest& request, const std::string& prompt) {
    std::variant<std::string, ErrorCode> next;
    {
        std::lock_guard lock(mu_);
        seen_.push_back(request);
        if (queue_.empty()) throw Error(ErrorCode::BadResponse, "script exhausted");
        next = std::move(queue_.front());
        queue_.pop_front();
    }
    if (const auto* code = std::get_if<ErrorCode>(&next)) throw Error(*code, "scripted failure");
    return make_reply(prompt, std::get<std::string>(std::move(next)));
}

// --- fault injection ---------------------------------------------------------

ChatReply FaultInjectingChat::do_chat(const ChatRequest& request, const std::string&) {
    const std::size_t n = seen_.fetch_add(1);
    bool fail = plan_.fail_all || n < plan_.fail_first;
    if (!fail && !plan_.poison.empty()) {
        for (const auto& [k, v] : request.bindings) {
            if (v.find(plan_.poison) != std::string::npos) fail = true;
        }
    }
    if (fail) {
        ++failures_;
        throw Error(plan_.code, "injected failure");
    }
    return inner_.chat(request);
}

} // namespace hyperrag
