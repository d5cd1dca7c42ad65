#pragma once

#include "hyperrag/backend/chat.hpp"
#include "hyperrag/backend/embedding.hpp"
#include "hyperrag/backend/judge.hpp"
#include "hyperrag/backend/mock_chat.hpp"
#include "hyperrag/evaluation.hpp"
#include "hyperrag/ingestion.hpp"
#include "hyperrag/retrieval.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hyperrag {

/// Everything a command needs. Loaded from a JSON file, then overridden by
/// flags. Secrets never live here; endpoint keys are read from the
/// environment variable named by `key_env`.
struct AppConfig {
    std::string corpus;
    std::string graph;
    std::string index; // vector-baseline chunk index; built from `corpus` when empty
    std::string profile = "default";
    std::string profile_dir = HYPERRAG_PROFILE_DIR;
    std::uint64_t seed = 0;
    std::string log_level = "info";

    bool mock = false;
    std::string script;   // mock only: scripted queries (JSON)
    std::string synonyms; // mock only: synonym table for the hashing embedder
    std::size_t embedding_dims = 256;

    nlohmann::json chat = nlohmann::json::object();      // endpoint section
    nlohmann::json embedding = nlohmann::json::object(); // endpoint section
    nlohmann::json judge = nlohmann::json::object();     // endpoint section; empty: reuse chat
    std::string key_env = "HYPERRAG_API_KEY";

    IngestionConfig ingestion;
    RetrievalConfig retrieval;

    /// Unknown top-level keys are rejected so typos surface early.
    static AppConfig from_json(const nlohmann::json& j);
    static AppConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Exit-code contract: 2 for usage and configuration problems, 1 otherwise.
int exit_code_for(const Error& e) noexcept;

std::vector<ScriptedQuery> load_script(const std::filesystem::path& path);
MockLexicon lexicon_from_corpus(const std::vector<Document>& corpus);
/// Entity names of a built graph, typed.
MockLexicon lexicon_from_graph(const Hypergraph& graph);

struct Backends {
    std::unique_ptr<ChatBackend> chat;
    std::unique_ptr<EmbeddingBackend> embedder;
    std::unique_ptr<ChatBackend> judge_chat; // only when a separate judge endpoint is configured
    std::unique_ptr<Judge> judge;
};

/// Mock mode wires MockChatBackend, HashingEmbedder and MockJudge; otherwise
/// live endpoints from the config.
Backends make_backends(const AppConfig& cfg, MockLexicon lexicon);

std::string generate_answer(ChatBackend& chat, const Sample& sample, const std::string& context);

/// Per-query seed used by every command, so a query replays from (seed, text).
std::uint64_t query_seed(std::uint64_t seed, std::string_view key) noexcept;

// Commands write human output to `out` and throw hyperrag::Error on failure.

struct BuildOutcome {
    BuildReport report;
    bool audit_clean = false;
};
BuildOutcome cmd_build(const AppConfig& cfg, const std::string& out_path, const std::string& report_path,
                       std::ostream& out);

void cmd_index(const AppConfig& cfg, const std::string& out_path, std::ostream& out);

void cmd_query(const AppConfig& cfg, const std::string& query, bool as_json, std::ostream& out);

/// Modes: keypoint, compare, accuracy, f1.
nlohmann::json cmd_eval(const AppConfig& cfg, const std::string& dataset, const std::string& mode,
                        const std::string& baseline, const std::string& report_path, std::ostream& out);

/// Prints counts and audit result; returns true when the audit is clean.
bool cmd_inspect(const AppConfig& cfg, bool as_json, std::ostream& out);

} // namespace hyperrag
