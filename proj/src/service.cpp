#include "hyperrag/service.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/persistence.hpp"
#include "hyperrag/rng.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <thread>

namespace hyperrag {

using nlohmann::json;

namespace {

Service::Response error_response(int status, const std::string& code, const std::string& message) {
    return {status, json{{"error", code}, {"message", message}}.dump()};
}

} // namespace

Service::Service(AppConfig cfg) : cfg_(std::move(cfg)), server_(std::make_unique<httplib::Server>()) {
    server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        const Response r = health();
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    });
    server_->Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
        const Response r = query(req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    });
}

Service::~Service() { stop(); }

void Service::load() {
    auto graph = std::make_unique<Hypergraph>(load_graph(cfg_.graph));
    if (const auto v = graph->audit(); !v.empty()) {
        throw Error(ErrorCode::AuditFailed, std::to_string(v.size()) + " violation(s) in " + cfg_.graph);
    }
    graph->freeze();
    backends_ = make_backends(cfg_, lexicon_from_graph(*graph));
    retriever_ = std::make_unique<Retriever>(*graph, *backends_.embedder);
    graph_ = std::move(graph);
    condition(cfg_.profile);
    ready_ = true;
    spdlog::info("serving {} ({} entities, {} topics)", cfg_.graph, graph_->entities().size(), graph_->topics().size());
}

Service::Response Service::health() const {
    if (!ready()) return {503, "loading", "text/plain"};
    return {200, "ok", "text/plain"};
}

SearchCondition Service::condition(const std::string& profile) {
    std::lock_guard lock(profiles_mu_);
    if (const auto it = profiles_.find(profile); it != profiles_.end()) return it->second;
    SearchCondition sc = SearchCondition::load(profile, cfg_.profile_dir);
    profiles_.emplace(profile, sc);
    return sc;
}

Service::Response Service::query(const std::string& body) {
    if (!ready()) return error_response(503, "loading", "graph is still loading");
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_response(400, "bad_request", e.what());
    }
    if (!j.is_object() || !j.contains("query") || !j["query"].is_string() ||
        text::trim(j["query"].get<std::string>()).empty()) {
        return error_response(400, "bad_request", "body needs a nonempty string field 'query'");
    }

    RetrievalConfig rc = cfg_.retrieval;
    std::string profile = cfg_.profile;
    std::uint64_t seed = 0;
    try {
        if (j.contains("profile")) profile = j["profile"].get<std::string>();
        if (j.contains("top_k")) rc.top_k = j["top_k"].get<std::size_t>();
        if (j.contains("seed")) {
            seed = j["seed"].get<std::uint64_t>();
        } else {
            seed = derive_seed(cfg_.seed, requests_.fetch_add(1));
            spdlog::info("query without seed, using {}", seed);
        }
        rc.validate();
    } catch (const json::exception& e) {
        return error_response(400, "bad_request", e.what());
    } catch (const Error& e) {
        return error_response(400, std::string(to_string(e.code())), e.what());
    }

    try {
        const SearchCondition sc = condition(profile);
        const RetrievalResult r = retriever_->retrieve(j["query"].get<std::string>(), rc, sc, *backends_.chat, seed);
        json out = r.to_json(*graph_);
        out["seed"] = seed;
        out["profile"] = sc.name;
        return {200, out.dump()};
    } catch (const Error& e) {
        const int status = exit_code_for(e) == 2 ? 400 : (e.retryable() ? 503 : 500);
        return error_response(status, std::string(to_string(e.code())), e.what());
    }
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    if (!server_->bind_to_port(host, port)) {
        throw Error(ErrorCode::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Service::serve() {
    std::exception_ptr load_error;
    std::thread loader([&] {
        try {
            load();
        } catch (...) {
            load_error = std::current_exception();
            // stop() is a no-op until the listener is running.
            for (int i = 0; i < 5000 && !server_->is_running(); ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            }
            server_->stop();
        }
    });
    server_->listen_after_bind();
    loader.join();
    if (load_error) std::rethrow_exception(load_error);
}

void Service::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

} // namespace hyperrag
