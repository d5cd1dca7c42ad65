#pragma once

#include "hyperrag/backend/chat.hpp"
#include "hyperrag/backend/embedding.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

namespace hyperrag {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal POST transport. Connection failures surface as Error(Timeout).
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib transport for http:// and (when built with OpenSSL) https://.
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout);

struct RetryPolicy {
    int max_retries = 3; // retries after the first attempt
    std::chrono::milliseconds initial_delay{500};
    double backoff_factor = 2.0;
    std::chrono::milliseconds max_delay{8000};
    /// Injected so tests can observe the schedule without sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;

    std::chrono::milliseconds delay_for(int retry) const;
};

struct EndpointConfig {
    std::string base_url; // scheme://host[:port]
    std::string path;     // e.g. /v1/chat/completions
    std::string model;
    std::string api_key; // from the environment only
    std::chrono::seconds timeout{60};
    RetryPolicy retry;

    /// Reads {base_url, path, model, timeout_s, max_retries} from `section`;
    /// the key comes from the environment variable named by `key_env`.
    static EndpointConfig from_json(const nlohmann::json& section, const std::string& key_env);
};

/// Chat-completions client: POST {model, messages, temperature, max_tokens},
/// reads choices[0].message.content and usage.{prompt,completion}_tokens.
class LiveChatBackend final : public ChatBackend {
public:
    LiveChatBackend(EndpointConfig config, std::unique_ptr<HttpTransport> transport);
    explicit LiveChatBackend(EndpointConfig config);

    std::string model_name() const override { return config_.model; }

protected:
    ChatReply do_chat(const ChatRequest& request, const std::string& prompt) override;

private:
    EndpointConfig config_;
    std::unique_ptr<HttpTransport> transport_;
};

/// Embedding client: POST {model, input} -> data[0].embedding.
class LiveEmbeddingBackend final : public EmbeddingBackend {
public:
    LiveEmbeddingBackend(EndpointConfig config, std::size_t dimensions, std::unique_ptr<HttpTransport> transport);
    LiveEmbeddingBackend(EndpointConfig config, std::size_t dimensions);

    std::size_t dimensions() const override { return dims_; }
    std::string model_name() const override { return config_.model; }

protected:
    EmbeddingVector do_embed(std::string_view text, BackendUsage& usage) override;

private:
    EndpointConfig config_;
    std::size_t dims_;
    std::unique_ptr<HttpTransport> transport_;
};

/// Runs one POST with retries on retryable status codes and transport errors.
/// `attempts` receives the number of transport attempts made.
HttpResponse post_with_retry(HttpTransport& transport, const EndpointConfig& config, const std::string& body,
                             std::uint64_t& attempts);

} // namespace hyperrag
