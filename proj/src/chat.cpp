#include "hyperrag/backend/chat.hpp"

#include "hyperrag/text.hpp"

namespace hyperrag {

nlohmann::json to_json(const BackendUsage& u) {
    return {{"prompt_tokens", u.prompt_tokens},
            {"completion_tokens", u.completion_tokens},
            {"total_tokens", u.total_tokens()},
            {"calls", u.calls},
            {"attempts", u.attempts}};
}

void UsageCounter::add(const BackendUsage& u) noexcept {
    prompt_.fetch_add(u.prompt_tokens, std::memory_order_relaxed);
    completion_.fetch_add(u.completion_tokens, std::memory_order_relaxed);
    calls_.fetch_add(u.calls, std::memory_order_relaxed);
    attempts_.fetch_add(u.attempts, std::memory_order_relaxed);
}

BackendUsage UsageCounter::snapshot() const noexcept {
    return {prompt_.load(), completion_.load(), calls_.load(), attempts_.load()};
}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
    peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

ChatReply ChatBackend::chat(const ChatRequest& request) {
    if (request.temperature < 0.0) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
    const std::string prompt = render(request);

    struct Slot {
        InFlightLimiter* l;
        explicit Slot(InFlightLimiter* limiter) : l(limiter) { if (l) l->acquire(); }
        ~Slot() { if (l) l->release(); }
    } slot(limiter_.get());

    ChatReply reply = do_chat(request, prompt);
    usage_.add(reply.usage);
    return reply;
}

ChatReply MeteredChat::do_chat(const ChatRequest& request, const std::string&) { return inner_.chat(request); }

nlohmann::json parse_json_reply(const std::string& raw) {
    std::string body = text::trim(raw);
    if (body.starts_with("```")) {
        const auto first_nl = body.find('\n');
        const auto fence_end = body.rfind("```");
        if (first_nl == std::string::npos || fence_end <= first_nl) {
            throw Error(ErrorCode::BadResponse, "unterminated code fence");
        }
        body = body.substr(first_nl + 1, fence_end - first_nl - 1);
    }
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::BadResponse, std::string("reply is not JSON: ") + e.what());
    }
}

nlohmann::json chat_json(ChatBackend& backend, ChatRequest request,
                         const std::function<void(const nlohmann::json&)>& validate, ErrorCode failure,
                         BackendUsage* usage) {
    std::string last_error;
    const bool first_is_reprompt = request.reprompt;
    for (int attempt = 0; attempt < 2; ++attempt) {
        request.reprompt = first_is_reprompt || attempt > 0;
        const ChatReply reply = backend.chat(request);
        if (usage) *usage += reply.usage;
        try {
            nlohmann::json value = parse_json_reply(reply.text);
            validate(value);
            return value;
        } catch (const Error& e) {
            last_error = e.what();
        } catch (const nlohmann::json::exception& e) {
            last_error = e.what();
        }
    }
    throw Error(failure, std::string(to_string(request.template_id)) + ": " + last_error);
}

} // namespace hyperrag
