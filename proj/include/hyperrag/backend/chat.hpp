#pragma once

#include "hyperrag/backend/prompt.hpp"
#include "hyperrag/error.hpp"

#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace hyperrag {

struct BackendUsage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t calls = 0;    // completed logical calls
    std::uint64_t attempts = 0; // transport attempts, including retries

    std::uint64_t total_tokens() const noexcept { return prompt_tokens + completion_tokens; }

    BackendUsage& operator+=(const BackendUsage& o) noexcept {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        calls += o.calls;
        attempts += o.attempts;
        return *this;
    }
    friend BackendUsage operator+(BackendUsage a, const BackendUsage& b) noexcept { return a += b; }
    friend bool operator==(const BackendUsage&, const BackendUsage&) = default;
};

nlohmann::json to_json(const BackendUsage& u);

/// Lock-free accumulator for usage shared across threads.
class UsageCounter {
public:
    void add(const BackendUsage& u) noexcept;
    BackendUsage snapshot() const noexcept;

private:
    std::atomic<std::uint64_t> prompt_{0};
    std::atomic<std::uint64_t> completion_{0};
    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> attempts_{0};
};

/// Bounds the number of simultaneous backend requests.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t limit) : limit_(limit == 0 ? 1 : limit) {}

    void acquire();
    void release();
    std::size_t limit() const noexcept { return limit_; }
    std::size_t peak() const noexcept { return peak_; }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t active_ = 0;
    std::size_t peak_ = 0;
};

struct ChatReply {
    std::string text;
    BackendUsage usage;
};

/// Chat-completion backend. Implementations override do_chat(); the public
/// entry point validates the request, applies the limiter and tallies usage.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    ChatReply chat(const ChatRequest& request);

    BackendUsage usage() const noexcept { return usage_.snapshot(); }
    void set_limiter(std::shared_ptr<InFlightLimiter> limiter) { limiter_ = std::move(limiter); }
    virtual std::string model_name() const = 0;

protected:
    virtual ChatReply do_chat(const ChatRequest& request, const std::string& prompt) = 0;

private:
    UsageCounter usage_;
    std::shared_ptr<InFlightLimiter> limiter_;
};

/// Forwards to another backend and keeps its own tally, so one stage of a
/// pipeline can be metered separately.
class MeteredChat final : public ChatBackend {
public:
    explicit MeteredChat(ChatBackend& inner) : inner_(inner) {}
    std::string model_name() const override { return inner_.model_name(); }

protected:
    ChatReply do_chat(const ChatRequest& request, const std::string& prompt) override;

private:
    ChatBackend& inner_;
};

/// Extracts a JSON value from a reply. Accepts a bare JSON document or one
/// fenced ```json block; anything else is rejected.
nlohmann::json parse_json_reply(const std::string& text);

/// Sends `request`, parses the reply as JSON and runs `validate` on it. On a
/// parse or validation failure, reprompts once and then throws `failure`.
nlohmann::json chat_json(ChatBackend& backend, ChatRequest request,
                         const std::function<void(const nlohmann::json&)>& validate,
                         ErrorCode failure = ErrorCode::BadResponse, BackendUsage* usage = nullptr);

} // namespace hyperrag
