#include "hyperrag/backend/live.hpp"

#include "hyperrag/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace hyperrag {

using nlohmann::json;

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : client_(base_url) {
        if (!client_.is_valid()) throw Error(ErrorCode::InvalidConfig, "unsupported endpoint URL " + base_url);
        client_.set_connection_timeout(timeout);
        client_.set_read_timeout(timeout);
        client_.set_write_timeout(timeout);
    }

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::map<std::string, std::string>& headers) override {
        httplib::Headers h(headers.begin(), headers.end());
        std::lock_guard lock(mu_);
        auto res = client_.Post(path, h, body, "application/json");
        if (!res) throw Error(ErrorCode::Timeout, "transport error: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

private:
    std::mutex mu_;
    httplib::Client client_;
};

std::map<std::string, std::string> auth_headers(const EndpointConfig& c) {
    std::map<std::string, std::string> h;
    if (!c.api_key.empty()) h["Authorization"] = "Bearer " + c.api_key;
    return h;
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BadResponse, std::string("malformed response body: ") + e.what());
    }
}

} // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(base_url, timeout);
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
    const double scaled = static_cast<double>(initial_delay.count()) * std::pow(backoff_factor, retry);
    return std::min(max_delay, std::chrono::milliseconds(static_cast<std::int64_t>(scaled)));
}

EndpointConfig EndpointConfig::from_json(const json& section, const std::string& key_env) {
    EndpointConfig c;
    c.base_url = section.value("base_url", "");
    c.path = section.value("path", "");
    c.model = section.value("model", "");
    c.timeout = std::chrono::seconds(section.value("timeout_s", 60));
    c.retry.max_retries = section.value("max_retries", 3);
    if (c.base_url.empty() || c.path.empty() || c.model.empty()) {
        throw Error(ErrorCode::InvalidConfig, "endpoint needs base_url, path and model");
    }
    if (const char* key = std::getenv(key_env.c_str())) c.api_key = key;
    return c;
}

HttpResponse post_with_retry(HttpTransport& transport, const EndpointConfig& config, const std::string& body,
                             std::uint64_t& attempts) {
    const auto headers = auth_headers(config);
    for (int retry = 0;; ++retry) {
        ++attempts;
        ErrorCode failure;
        std::string detail;
        try {
            HttpResponse res = transport.post(config.path, body, headers);
            if (res.status >= 200 && res.status < 300) return res;
            if (res.status == 429) {
                failure = ErrorCode::RateLimited;
            } else if (res.status == 408 || res.status >= 500) {
                failure = ErrorCode::Unavailable;
            } else {
                throw Error(ErrorCode::BadResponse, "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
            }
            detail = "HTTP " + std::to_string(res.status);
        } catch (const Error& e) {
            if (!e.retryable()) throw;
            failure = e.code();
            detail = e.what();
        }
        if (retry >= config.retry.max_retries) {
            throw Error(failure, detail + " after " + std::to_string(retry + 1) + " attempt(s)");
        }
        const auto delay = config.retry.delay_for(retry);
        spdlog::warn("{} from {}{}; retrying in {} ms", detail, config.base_url, config.path, delay.count());
        if (config.retry.sleep) {
            config.retry.sleep(delay);
        } else {
            std::this_thread::sleep_for(delay);
        }
    }
}

LiveChatBackend::LiveChatBackend(EndpointConfig config, std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

LiveChatBackend::LiveChatBackend(EndpointConfig config)
    : LiveChatBackend(config, make_http_transport(config.base_url, config.timeout)) {}

ChatReply LiveChatBackend::do_chat(const ChatRequest& request, const std::string& prompt) {
    const json body{{"model", config_.model},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens}};
    ChatReply reply;
    const HttpResponse res = post_with_retry(*transport_, config_, body.dump(), reply.usage.attempts);
    const json j = parse_body(res.body);
    try {
        reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (const auto u = j.find("usage"); u != j.end() && u->is_object()) {
            reply.usage.prompt_tokens = u->value("prompt_tokens", 0ULL);
            reply.usage.completion_tokens = u->value("completion_tokens", 0ULL);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BadResponse, std::string("unexpected chat response shape: ") + e.what());
    }
    reply.usage.calls = 1;
    return reply;
}

LiveEmbeddingBackend::LiveEmbeddingBackend(EndpointConfig config, std::size_t dimensions,
                                           std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), dims_(dimensions), transport_(std::move(transport)) {}

LiveEmbeddingBackend::LiveEmbeddingBackend(EndpointConfig config, std::size_t dimensions)
    : LiveEmbeddingBackend(config, dimensions, make_http_transport(config.base_url, config.timeout)) {}

EmbeddingVector LiveEmbeddingBackend::do_embed(std::string_view text, BackendUsage& usage) {
    const json body{{"model", config_.model}, {"input", std::string(text)}};
    const HttpResponse res = post_with_retry(*transport_, config_, body.dump(), usage.attempts);
    const json j = parse_body(res.body);
    std::vector<double> v;
    try {
        v = j.at("data").at(0).at("embedding").get<std::vector<double>>();
        if (const auto u = j.find("usage"); u != j.end() && u->is_object()) {
            usage.prompt_tokens = u->value("prompt_tokens", 0ULL);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BadResponse, std::string("unexpected embedding response shape: ") + e.what());
    }
    if (dims_ != 0 && v.size() != dims_) {
        throw Error(ErrorCode::BadResponse,
                    "embedding has " + std::to_string(v.size()) + " dims, expected " + std::to_string(dims_));
    }
    usage.calls = 1;
    return EmbeddingVector::normalized(std::move(v));
}

} // namespace hyperrag
