#pragma once

#include "hyperrag/backend/chat.hpp"
#include "hyperrag/backend/embedding.hpp"
#include "hyperrag/bipartite.hpp"
#include "hyperrag/hypergraph.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hyperrag {

enum class SamplingMode { RandomWalk, Neighbor, Ppr };
enum class RankingMode { Attention, Cosine };

std::string_view to_string(SamplingMode m) noexcept;
std::string_view to_string(RankingMode m) noexcept;
SamplingMode sampling_mode_from_name(std::string_view name);
RankingMode ranking_mode_from_name(std::string_view name);

struct RetrievalConfig {
    std::size_t n_m = 3;     // entities linked per search term
    std::size_t n_t = 20;    // topics retained
    std::size_t n_p = 4;     // topic packages
    std::size_t alpha = 2;   // max walk steps (entity -> topic -> entity)
    std::size_t beta = 10000; // walks
    std::size_t top_k = 20;
    std::size_t context_budget = 8000; // words
    SamplingMode sampling = SamplingMode::RandomWalk;
    RankingMode ranking = RankingMode::Attention;
    bool uniform_transitions = false;
    double ppr_restart = 0.15;
    std::size_t ppr_iterations = 50;
    std::size_t max_in_flight = 4; // concurrent package calls

    void validate() const;
    /// Overrides fields present in `j`; unknown keys are rejected.
    static RetrievalConfig from_json(const nlohmann::json& j, RetrievalConfig base);
    static RetrievalConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Task-specific rule text for the feature-extraction prompt.
struct SearchCondition {
    std::string name;
    std::string rules;

    /// `name_or_path` is either a profile name resolved inside `dir` as
    /// `<name>.txt`, or a path to a text file.
    static SearchCondition load(const std::string& name_or_path,
                                const std::filesystem::path& dir = HYPERRAG_PROFILE_DIR);
};

std::vector<std::string> available_profiles(const std::filesystem::path& dir = HYPERRAG_PROFILE_DIR);

struct EvidenceFeature {
    std::string text;
    double usefulness = 0.0; // 0..10
    std::size_t package = 0;
};

/// At least five deduplicated terms when the backend cooperates; one
/// reprompt, then proceeds with what it has and appends a warning.
std::vector<std::string> extract_search_words(const std::string& query, ChatBackend& backend,
                                              std::vector<std::string>* warnings = nullptr);

/// Entity-name embeddings, computed once per loaded graph.
class EntityLinker {
public:
    EntityLinker(const Hypergraph& graph, EmbeddingBackend& embedder);

    struct Candidate {
        EntityId id;
        double cosine;
    };
    /// All entities ordered by (cosine desc, id asc).
    std::vector<Candidate> rank(const std::string& term) const;
    std::size_t size() const noexcept { return ids_.size(); }

private:
    EmbeddingBackend& embedder_;
    std::vector<EntityId> ids_;
    std::vector<EmbeddingVector> vectors_;
};

/// Union over terms of each term's top n_m entities, in ascending id order.
std::vector<EntityId> link_entities(std::span<const std::string> terms, const EntityLinker& linker, std::size_t n_m);

using TopicFrequencies = std::map<TopicId, double>;

/// beta independent walks of at most alpha steps, each from a uniformly
/// chosen seed. f(t) counts walks that visit t at least once.
TopicFrequencies random_walk_topics(const BipartiteView& view, std::span<const EntityId> seeds, std::size_t alpha,
                                    std::size_t beta, std::uint64_t seed, bool uniform_transitions = false);

/// One-hop alternative: f(t) = sum of w(t, m) over linked neighbors m.
TopicFrequencies neighbor_topics(const BipartiteView& view, std::span<const EntityId> seeds);

/// Personalized PageRank mass on topics, restarting at the seeds.
TopicFrequencies ppr_topics(const BipartiteView& view, std::span<const EntityId> seeds, double restart,
                            std::size_t iterations);

/// Top n_t visited topics by frequency, ties by ascending id.
std::vector<TopicId> select_topics(const TopicFrequencies& f, std::size_t n_t);

/// Seeded shuffle then balanced split; empty packages are dropped.
std::vector<std::vector<TopicId>> package_topics(std::span<const TopicId> topics, std::size_t n_p,
                                                 std::uint64_t seed);

/// One backend call per package, concurrently. Failed packages are skipped
/// with a warning; out-of-range usefulness is clamped with a warning.
std::vector<EvidenceFeature> extract_features(const std::string& query,
                                              const std::vector<std::vector<TopicId>>& packages,
                                              const Hypergraph& graph, const SearchCondition& sc,
                                              ChatBackend& backend, std::size_t max_in_flight = 4,
                                              std::vector<std::string>* warnings = nullptr);

/// softmax_i(cos(e, f_i)), numerically stable.
std::vector<double> attention_weights(const EmbeddingVector& e, std::span<const EmbeddingVector> features);

/// Sum_i u_i * softmax_i(cos(e, f_i)). Throws NoFeatures on an empty feature set.
double attention_score(const EmbeddingVector& e, std::span<const EmbeddingVector> features,
                       std::span<const double> usefulness);

double score_evidence(const std::string& evidence_text, const std::vector<EvidenceFeature>& features,
                      EmbeddingBackend& embedder);

struct ScoredEvidence {
    EvidenceId id;
    double score = 0.0;
    std::size_t words = 0;
};

struct RetrievalResult {
    std::string query;
    std::vector<std::string> terms;
    std::vector<EntityId> linked;
    TopicFrequencies frequencies; // retained topics only
    std::vector<TopicId> topics;  // retained, by frequency
    std::vector<std::vector<TopicId>> packages;
    std::vector<EvidenceFeature> features;
    std::vector<ScoredEvidence> evidence; // score desc, id asc
    std::size_t candidates = 0;
    std::size_t dropped_by_top_k = 0;
    std::size_t dropped_by_budget = 0;
    std::size_t total_words = 0;
    std::optional<std::string> empty_reason; // no_entities_linked | no_topics_visited | no_features
    std::vector<std::string> warnings;
    BackendUsage usage;

    bool empty() const noexcept { return evidence.empty(); }
    /// Evidence descriptions joined one per line, in rank order.
    std::string context(const Hypergraph& graph) const;
    nlohmann::json to_json(const Hypergraph& graph) const;
};

/// Query path over one frozen graph. Safe to share between threads as long
/// as the embedder is.
class Retriever {
public:
    Retriever(const Hypergraph& graph, EmbeddingBackend& embedder);

    RetrievalResult retrieve(const std::string& query, const RetrievalConfig& cfg, const SearchCondition& sc,
                             ChatBackend& chat, std::uint64_t seed) const;

    const Hypergraph& graph() const noexcept { return graph_; }
    const BipartiteView& view() const noexcept { return view_; }
    const EntityLinker& linker() const noexcept { return linker_; }

private:
    const Hypergraph& graph_;
    EmbeddingBackend& embedder_;
    BipartiteView view_;
    EntityLinker linker_;
};

} // namespace hyperrag
