#pragma once

#include "hyperrag/app.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace hyperrag {

/// Read-only query endpoint over one loaded graph.
///
///   GET  /healthz  200 "ok" once loaded, 503 before
///   POST /query    {query, profile?, top_k?, seed?} -> retrieval trace
class Service {
public:
    struct Response {
        int status = 200;
        std::string body;
        std::string content_type = "application/json";
    };

    explicit Service(AppConfig cfg);
    ~Service();

    /// Loads the graph and backends; until this returns, /healthz answers 503.
    void load();
    bool ready() const noexcept { return ready_.load(); }

    Response health() const;
    Response query(const std::string& body);

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Loads in the background and serves until stop().
    void serve();
    void stop();

private:
    SearchCondition condition(const std::string& profile);

    AppConfig cfg_;
    std::unique_ptr<Hypergraph> graph_;
    Backends backends_;
    std::unique_ptr<Retriever> retriever_;
    std::atomic<bool> ready_{false};
    std::atomic<std::uint64_t> requests_{0};
    std::mutex profiles_mu_;
    std::map<std::string, SearchCondition> profiles_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace hyperrag
