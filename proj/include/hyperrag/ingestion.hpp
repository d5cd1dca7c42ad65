#pragma once

#include "hyperrag/backend/chat.hpp"
#include "hyperrag/hypergraph.hpp"
#include "hyperrag/text.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hyperrag {

struct Document {
    std::string id;
    std::string title;
    std::string abstract; // may be empty
    std::string body;
    std::string lang;
};

Document parse_document(const nlohmann::json& j, const std::string& fallback_id = {});

/// Reads every *.json file in `dir`, ordered by document id.
std::vector<Document> load_corpus(const std::filesystem::path& dir);

struct Keyword {
    std::string text;
    std::string type;
    friend bool operator==(const Keyword&, const Keyword&) = default;
};

/// One window of a document's body. Token offsets index the document's token stream.
struct TextUnit {
    std::string document_id;
    std::uint32_t chunk_index = 0;
    std::string content;
    std::size_t token_begin = 0;
    std::size_t token_end = 0;
    std::vector<Keyword> keywords; // shared by all units of a document
};

struct IngestionConfig {
    std::size_t window = 1024; // tokens
    std::size_t overlap = 200; // tokens
    text::TokenizerMode tokenizer = text::TokenizerMode::Auto;
    std::string normalization_path; // empty: identity normalization
    std::size_t summary_batch = 10; // evidence per local topic summary
    std::size_t max_in_flight = 4;  // concurrent documents / backend calls

    std::size_t stride() const noexcept { return window - overlap; }
    /// Throws InvalidConfig unless 0 <= overlap < window and batch sizes are positive.
    void validate() const;
};

/// raw term -> normalized terms. A raw term may map to several terms; unknown
/// terms normalize to themselves. All keys and values are case-folded.
class NormalizationTable {
public:
    static NormalizationTable load(const std::filesystem::path& tsv);

    void add(std::string_view raw, std::string_view normalized);
    std::vector<std::string> normalize(std::string_view raw) const;
    std::size_t size() const noexcept { return table_.size(); }

private:
    std::map<std::string, std::vector<std::string>> table_;
};

/// Chunk i covers tokens [i*stride, i*stride + window); the last chunk may be short.
std::vector<TextUnit> split_document(const Document& doc, const IngestionConfig& cfg);

/// Keywords from title and abstract, filtered to the relation map's keyword
/// types. Dropped keywords are appended to `warnings`. Throws NoKeywords when
/// none survive.
std::vector<Keyword> extract_document_keywords(const Document& doc, ChatBackend& backend,
                                               const HyperRelationMap& relations = HyperRelationMap::standard(),
                                               std::vector<std::string>* warnings = nullptr);

/// Evidence for one legal (keyword, label) pair in one unit; ids are unassigned.
std::vector<Evidence> extract_evidence(const TextUnit& unit, const Keyword& keyword, const std::string& label,
                                       ChatBackend& backend,
                                       const HyperRelationMap& relations = HyperRelationMap::standard());

struct EntityMention {
    std::string name; // normalized, folded
    std::string type;
};

/// f(e) for one evidence: backend mentions mapped through the normalization
/// table, split into one mention per normalized term, deduplicated.
std::vector<EntityMention> extract_entity_mentions(const Evidence& ev, const std::set<std::string>& entity_types,
                                                   const NormalizationTable& table, ChatBackend& backend);

/// Runs extract_entity_mentions and records each mention in the graph (E_m).
/// Returns the normalized names.
std::vector<std::string> extract_entities(Hypergraph& graph, EvidenceId ev, const NormalizationTable& table,
                                          ChatBackend& backend);

/// One topic per distinct label in E_m, summarized batch-wise when a label
/// group exceeds cfg.summary_batch. Topic ids are unassigned.
std::vector<Topic> generate_topics(const Hypergraph& graph, EntityId entity, ChatBackend& backend,
                                   const IngestionConfig& cfg);

struct SkippedDocument {
    std::string id;
    std::string reason;
};

struct BuildReport {
    std::size_t entities = 0;
    std::size_t topics = 0;
    std::size_t evidence = 0;
    std::size_t edges = 0;
    std::size_t documents_total = 0;
    std::size_t documents_processed = 0;
    std::size_t chunks = 0;
    std::size_t duplicate_evidence = 0;
    std::vector<SkippedDocument> skipped;
    std::size_t entity_failures = 0;
    std::size_t topic_failures = 0;
    std::map<std::string, BackendUsage> stage_usage; // keywords, evidence, entities, topics
    BackendUsage usage;                             // sum of stage_usage
    std::vector<std::string> warnings;
    std::vector<Violation> violations;

    nlohmann::json to_json() const;
};

struct BuildResult {
    Hypergraph graph;
    BuildReport report;
};

/// split -> keywords -> evidence -> entities -> topics -> link -> audit.
/// Per-document backend failures skip the document; the returned graph is frozen.
BuildResult build_graph(std::vector<Document> corpus, const IngestionConfig& cfg, ChatBackend& backend,
                        const HyperRelationMap& relations = HyperRelationMap::standard());

} // namespace hyperrag
