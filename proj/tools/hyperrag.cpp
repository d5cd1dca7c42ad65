// hyperrag: build, query and evaluate an evidence hypergraph.

#include "hyperrag/app.hpp"
#include "hyperrag/error.hpp"
#include "hyperrag/service.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>

namespace {

hyperrag::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

struct Overrides {
    std::string config;
    std::string log_level;
    std::optional<std::uint64_t> seed;
    bool mock = false;
    std::string profile;
    std::string corpus;
    std::string graph;
    std::string index;
    std::string script;
    std::optional<std::size_t> top_k;
    std::string sampling;
    std::string ranking;
};

hyperrag::AppConfig resolve(const Overrides& o) {
    hyperrag::AppConfig cfg = o.config.empty() ? hyperrag::AppConfig{} : hyperrag::AppConfig::load(o.config);
    if (!o.log_level.empty()) cfg.log_level = o.log_level;
    if (o.seed) cfg.seed = *o.seed;
    if (o.mock) cfg.mock = true;
    if (!o.profile.empty()) cfg.profile = o.profile;
    if (!o.corpus.empty()) cfg.corpus = o.corpus;
    if (!o.graph.empty()) cfg.graph = o.graph;
    if (!o.index.empty()) cfg.index = o.index;
    if (!o.script.empty()) cfg.script = o.script;
    if (o.top_k) cfg.retrieval.top_k = *o.top_k;
    if (!o.sampling.empty()) cfg.retrieval.sampling = hyperrag::sampling_mode_from_name(o.sampling);
    if (!o.ranking.empty()) cfg.retrieval.ranking = hyperrag::ranking_mode_from_name(o.ranking);
    cfg.retrieval.validate();
    spdlog::set_level(spdlog::level::from_str(cfg.log_level));
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("hyperrag"));

    CLI::App app{"Evidence hypergraph retrieval"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error, off");
    app.add_option("--seed", o.seed, "run seed");
    app.add_flag("--mock", o.mock, "offline mock backends");

    auto* build = app.add_subcommand("build", "build a graph from a corpus directory");
    std::string out_path, report_path;
    build->add_option("--corpus", o.corpus, "directory of *.json documents");
    build->add_option("--out", out_path, "graph file to write")->required();
    build->add_option("--report", report_path, "build report JSON");

    auto* index = app.add_subcommand("index", "build the vector-baseline chunk index");
    index->add_option("--corpus", o.corpus, "directory of *.json documents");
    index->add_option("--out", out_path, "index file to write")->required();

    auto* query = app.add_subcommand("query", "retrieve evidence for one question");
    std::string question;
    bool as_json = false;
    query->add_option("--graph", o.graph, "graph file");
    query->add_option("--profile", o.profile, "search-condition profile name or file");
    query->add_option("--script", o.script, "scripted mock queries");
    query->add_option("--top-k", o.top_k, "evidence returned");
    query->add_option("--sampling", o.sampling, "random_walk, neighbor or ppr");
    query->add_option("--ranking", o.ranking, "attention or cosine");
    query->add_flag("--json", as_json, "print the full trace");
    query->add_option("question", question, "query text")->required();

    auto* eval = app.add_subcommand("eval", "score retrieval over a dataset");
    std::string dataset, mode, baseline;
    eval->add_option("--graph", o.graph, "graph file");
    eval->add_option("--dataset", dataset, "JSON Lines dataset")->required();
    eval->add_option("--mode", mode, "keypoint, compare, accuracy or f1")
        ->required()
        ->check(CLI::IsMember({"keypoint", "compare", "accuracy", "f1"}));
    eval->add_option("--baseline", baseline, "comparison system")->check(CLI::IsMember({"vector"}));
    eval->add_option("--corpus", o.corpus, "corpus for the baseline index");
    eval->add_option("--index", o.index, "prebuilt baseline index");
    eval->add_option("--profile", o.profile, "search-condition profile");
    eval->add_option("--script", o.script, "scripted mock queries");
    eval->add_option("--out", report_path, "report JSON");

    auto* serve = app.add_subcommand("serve", "HTTP query endpoint");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--graph", o.graph, "graph file");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port (0 picks one)");
    serve->add_option("--profile", o.profile, "default search-condition profile");
    serve->add_option("--script", o.script, "scripted mock queries");

    auto* inspect = app.add_subcommand("inspect", "counts and audit of a graph file");
    inspect->add_option("--graph", o.graph, "graph file");
    inspect->add_flag("--json", as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const hyperrag::AppConfig cfg = resolve(o);
        if (*build) {
            const auto outcome = hyperrag::cmd_build(cfg, out_path, report_path, std::cout);
            return outcome.audit_clean ? 0 : 1;
        }
        if (*index) {
            hyperrag::cmd_index(cfg, out_path, std::cout);
            return 0;
        }
        if (*query) {
            hyperrag::cmd_query(cfg, question, as_json, std::cout);
            return 0;
        }
        if (*eval) {
            hyperrag::cmd_eval(cfg, dataset, mode, baseline.empty() && mode == "compare" ? "vector" : baseline,
                               report_path, std::cout);
            return 0;
        }
        if (*serve) {
            hyperrag::Service service(cfg);
            const int bound = service.bind(host, port);
            std::cout << "listening on " << host << ":" << bound << std::endl;
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.serve();
            g_service = nullptr;
            return 0;
        }
        if (*inspect) return hyperrag::cmd_inspect(cfg, as_json, std::cout) ? 0 : 1;
    } catch (const hyperrag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hyperrag::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
