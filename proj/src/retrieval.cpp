#include "hyperrag/retrieval.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/parallel.hpp"
#include "hyperrag/rng.hpp"
#include "hyperrag/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hyperrag {

using nlohmann::json;

std::string_view to_string(SamplingMode m) noexcept {
    switch (m) {
    case SamplingMode::RandomWalk: return "random_walk";
    case SamplingMode::Neighbor: return "neighbor";
    case SamplingMode::Ppr: return "ppr";
    }
    return "?";
}

std::string_view to_string(RankingMode m) noexcept {
    return m == RankingMode::Attention ? "attention" : "cosine";
}

SamplingMode sampling_mode_from_name(std::string_view name) {
    for (auto m : {SamplingMode::RandomWalk, SamplingMode::Neighbor, SamplingMode::Ppr}) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown sampling mode: " + std::string(name));
}

RankingMode ranking_mode_from_name(std::string_view name) {
    for (auto m : {RankingMode::Attention, RankingMode::Cosine}) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown ranking mode: " + std::string(name));
}

// --- config --------------------------------------------------------------------

void RetrievalConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be at least 1");
    };
    positive(n_m, "n_m");
    positive(n_t, "n_t");
    positive(n_p, "n_p");
    positive(alpha, "alpha");
    positive(beta, "beta");
    positive(top_k, "top_k");
    positive(context_budget, "context_budget");
    positive(ppr_iterations, "ppr_iterations");
    if (!(ppr_restart > 0.0 && ppr_restart < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "ppr_restart must lie in (0, 1)");
    }
}

RetrievalConfig RetrievalConfig::from_json(const json& j, RetrievalConfig c) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "retrieval config must be an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "n_m") c.n_m = value.get<std::size_t>();
            else if (key == "n_t") c.n_t = value.get<std::size_t>();
            else if (key == "n_p") c.n_p = value.get<std::size_t>();
            else if (key == "alpha") c.alpha = value.get<std::size_t>();
            else if (key == "beta") c.beta = value.get<std::size_t>();
            else if (key == "top_k") c.top_k = value.get<std::size_t>();
            else if (key == "context_budget") c.context_budget = value.get<std::size_t>();
            else if (key == "sampling") c.sampling = sampling_mode_from_name(value.get<std::string>());
            else if (key == "ranking") c.ranking = ranking_mode_from_name(value.get<std::string>());
            else if (key == "uniform_transitions") c.uniform_transitions = value.get<bool>();
            else if (key == "ppr_restart") c.ppr_restart = value.get<double>();
            else if (key == "ppr_iterations") c.ppr_iterations = value.get<std::size_t>();
            else if (key == "max_in_flight") c.max_in_flight = value.get<std::size_t>();
            else throw Error(ErrorCode::InvalidConfig, "unknown retrieval setting: " + key);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("retrieval config: ") + e.what());
    }
    c.validate();
    return c;
}

RetrievalConfig RetrievalConfig::from_json(const json& j) { return from_json(j, RetrievalConfig{}); }

json RetrievalConfig::to_json() const {
    return {{"n_m", n_m},
            {"n_t", n_t},
            {"n_p", n_p},
            {"alpha", alpha},
            {"beta", beta},
            {"top_k", top_k},
            {"context_budget", context_budget},
            {"sampling", std::string(to_string(sampling))},
            {"ranking", std::string(to_string(ranking))},
            {"uniform_transitions", uniform_transitions},
            {"ppr_restart", ppr_restart},
            {"ppr_iterations", ppr_iterations},
            {"max_in_flight", max_in_flight}};
}

// --- search conditions ------------------------------------------------------------

SearchCondition SearchCondition::load(const std::string& name_or_path, const std::filesystem::path& dir) {
    std::filesystem::path path(name_or_path);
    if (!std::filesystem::is_regular_file(path)) path = dir / (name_or_path + ".txt");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "unknown search-condition profile: " + name_or_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    SearchCondition sc{path.stem().string(), text::trim(ss.str())};
    if (sc.rules.empty()) throw Error(ErrorCode::InvalidConfig, "empty search-condition profile: " + path.string());
    return sc;
}

std::vector<std::string> available_profiles(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".txt") names.push_back(entry.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

// --- search words ----------------------------------------------------------------

std::vector<std::string> extract_search_words(const std::string& query, ChatBackend& backend,
                                              std::vector<std::string>* warnings) {
    if (text::trim(query).empty()) throw Error(ErrorCode::EmptyInput, "query is empty");
    constexpr std::size_t kMinTerms = 5;
    auto ask = [&](bool reprompt) {
        ChatRequest req{TemplateId::SearchWords, {{"query", query}}};
        req.reprompt = reprompt;
        const json reply = chat_json(backend, req, [](const json& j) {
            for (const auto& t : j.at("terms")) {
                if (!t.is_string()) throw Error(ErrorCode::BadResponse, "terms must be strings");
            }
        });
        std::vector<std::string> terms;
        std::set<std::string> seen;
        for (const auto& t : reply["terms"]) {
            std::string term = text::trim(t.get<std::string>());
            if (!term.empty() && seen.insert(text::fold(term)).second) terms.push_back(std::move(term));
        }
        return terms;
    };

    auto terms = ask(false);
    if (terms.size() < kMinTerms) {
        auto again = ask(true);
        if (again.size() > terms.size()) terms = std::move(again);
        if (terms.size() < kMinTerms) {
            const std::string msg = "only " + std::to_string(terms.size()) + " search terms for query";
            spdlog::warn("{}", msg);
            if (warnings) warnings->push_back(msg);
        }
    }
    return terms;
}

// --- entity linking ------------------------------------------------------------

EntityLinker::EntityLinker(const Hypergraph& graph, EmbeddingBackend& embedder) : embedder_(embedder) {
    ids_.reserve(graph.entities().size());
    vectors_.reserve(graph.entities().size());
    for (const auto& [id, m] : graph.entities()) {
        ids_.push_back(id);
        vectors_.push_back(embedder.embed(m.name));
    }
}

std::vector<EntityLinker::Candidate> EntityLinker::rank(const std::string& term) const {
    const EmbeddingVector q = embedder_.embed(term);
    std::vector<Candidate> out;
    out.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) out.push_back({ids_[i], q.cosine(vectors_[i])});
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return a.cosine != b.cosine ? a.cosine > b.cosine : a.id < b.id;
    });
    return out;
}

std::vector<EntityId> link_entities(std::span<const std::string> terms, const EntityLinker& linker, std::size_t n_m) {
    std::set<EntityId> linked;
    for (const auto& term : terms) {
        const auto ranked = linker.rank(term);
        for (std::size_t i = 0; i < std::min(n_m, ranked.size()); ++i) linked.insert(ranked[i].id);
    }
    return {linked.begin(), linked.end()};
}

// --- topic locating ------------------------------------------------------------

namespace {

std::vector<std::size_t> seed_indices(const BipartiteView& view, std::span<const EntityId> seeds) {
    std::vector<std::size_t> out;
    for (EntityId id : seeds) {
        const auto idx = view.entity_index(id);
        if (!idx) throw Error(ErrorCode::UnknownId, "seed entity not in graph: " + to_string(id));
        out.push_back(*idx);
    }
    return out;
}

void require_connected(const BipartiteView& view, const std::vector<std::size_t>& seeds) {
    const bool any = std::any_of(seeds.begin(), seeds.end(),
                                 [&](std::size_t s) { return !view.entity_neighbors(s).empty(); });
    if (!any) throw Error(ErrorCode::IsolatedSeeds, "no linked entity has a topic edge");
}

// Picks a neighbor position: proportional to weight via the running sums, or uniformly.
std::size_t pick(Rng& rng, std::span<const double> cumulative, bool uniform) {
    if (uniform) return static_cast<std::size_t>(rng.below(cumulative.size()));
    const double r = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

} // namespace

TopicFrequencies random_walk_topics(const BipartiteView& view, std::span<const EntityId> seeds, std::size_t alpha,
                                    std::size_t beta, std::uint64_t seed, bool uniform_transitions) {
    if (alpha == 0) throw Error(ErrorCode::InvalidConfig, "alpha must be at least 1");
    const auto starts = seed_indices(view, seeds);
    require_connected(view, starts);

    Rng rng(seed);
    std::vector<std::uint64_t> counts(view.topic_count(), 0);
    std::vector<std::size_t> last_walk(view.topic_count(), 0);
    for (std::size_t walk = 1; walk <= beta; ++walk) {
        std::size_t entity = starts[rng.below(starts.size())];
        for (std::size_t step = 0; step < alpha; ++step) {
            const auto topics = view.entity_neighbors(entity);
            if (topics.empty()) break;
            const std::size_t topic = topics[pick(rng, view.entity_cumulative(entity), uniform_transitions)].index;
            if (last_walk[topic] != walk) {
                last_walk[topic] = walk;
                ++counts[topic];
            }
            const auto entities = view.topic_neighbors(topic);
            if (entities.empty()) break;
            entity = entities[pick(rng, view.topic_cumulative(topic), uniform_transitions)].index;
        }
    }

    TopicFrequencies f;
    for (std::size_t t = 0; t < counts.size(); ++t) {
        if (counts[t] > 0) f.emplace(view.topic_id(t), static_cast<double>(counts[t]));
    }
    return f;
}

TopicFrequencies neighbor_topics(const BipartiteView& view, std::span<const EntityId> seeds) {
    const auto starts = seed_indices(view, seeds);
    require_connected(view, starts);
    std::vector<double> sums(view.topic_count(), 0.0);
    for (std::size_t s : std::set<std::size_t>(starts.begin(), starts.end())) {
        for (const auto& n : view.entity_neighbors(s)) sums[n.index] += n.weight;
    }
    TopicFrequencies f;
    for (std::size_t t = 0; t < sums.size(); ++t) {
        if (sums[t] > 0.0) f.emplace(view.topic_id(t), sums[t]);
    }
    return f;
}

TopicFrequencies ppr_topics(const BipartiteView& view, std::span<const EntityId> seeds, double restart,
                            std::size_t iterations) {
    const auto starts = seed_indices(view, seeds);
    require_connected(view, starts);
    const std::set<std::size_t> unique(starts.begin(), starts.end());
    const double share = 1.0 / static_cast<double>(unique.size());

    const std::size_t nt = view.topic_count();
    const std::size_t ne = view.entity_count();
    std::vector<double> topic_mass(nt, 0.0), entity_mass(ne, 0.0);
    for (std::size_t s : unique) entity_mass[s] = share;

    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<double> next_topic(nt, 0.0), next_entity(ne, 0.0);
        double dangling = 0.0;
        for (std::size_t m = 0; m < ne; ++m) {
            if (entity_mass[m] == 0.0) continue;
            const auto nbrs = view.entity_neighbors(m);
            if (nbrs.empty()) {
                dangling += entity_mass[m];
                continue;
            }
            const double total = view.entity_cumulative(m).back();
            for (const auto& n : nbrs) next_topic[n.index] += (1.0 - restart) * entity_mass[m] * n.weight / total;
        }
        for (std::size_t t = 0; t < nt; ++t) {
            if (topic_mass[t] == 0.0) continue;
            const auto nbrs = view.topic_neighbors(t);
            if (nbrs.empty()) {
                dangling += topic_mass[t];
                continue;
            }
            const double total = view.topic_cumulative(t).back();
            for (const auto& n : nbrs) next_entity[n.index] += (1.0 - restart) * topic_mass[t] * n.weight / total;
        }
        // Restart mass and mass stranded on dangling nodes both return to the seeds.
        const double back = restart + (1.0 - restart) * dangling;
        for (std::size_t s : unique) next_entity[s] += back * share;
        topic_mass.swap(next_topic);
        entity_mass.swap(next_entity);
    }

    TopicFrequencies f;
    for (std::size_t t = 0; t < nt; ++t) {
        if (topic_mass[t] > 0.0) f.emplace(view.topic_id(t), topic_mass[t]);
    }
    return f;
}

std::vector<TopicId> select_topics(const TopicFrequencies& f, std::size_t n_t) {
    std::vector<std::pair<TopicId, double>> items;
    for (const auto& [id, v] : f) {
        if (v > 0.0) items.emplace_back(id, v);
    }
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    std::vector<TopicId> out;
    for (std::size_t i = 0; i < std::min(n_t, items.size()); ++i) out.push_back(items[i].first);
    return out;
}

std::vector<std::vector<TopicId>> package_topics(std::span<const TopicId> topics, std::size_t n_p,
                                                 std::uint64_t seed) {
    if (n_p == 0) throw Error(ErrorCode::InvalidConfig, "n_p must be at least 1");
    std::vector<TopicId> shuffled(topics.begin(), topics.end());
    Rng rng(seed);
    rng.shuffle(std::span<TopicId>(shuffled));

    const std::size_t base = shuffled.size() / n_p;
    const std::size_t extra = shuffled.size() % n_p;
    std::vector<std::vector<TopicId>> packages;
    auto it = shuffled.begin();
    for (std::size_t i = 0; i < n_p; ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        if (size == 0) break;
        packages.emplace_back(it, it + static_cast<std::ptrdiff_t>(size));
        it += static_cast<std::ptrdiff_t>(size);
    }
    return packages;
}

// --- features and scoring ----------------------------------------------------------

std::vector<EvidenceFeature> extract_features(const std::string& query,
                                              const std::vector<std::vector<TopicId>>& packages,
                                              const Hypergraph& graph, const SearchCondition& sc,
                                              ChatBackend& backend, std::size_t max_in_flight,
                                              std::vector<std::string>* warnings) {
    struct Outcome {
        std::vector<EvidenceFeature> features;
        std::vector<std::string> warnings;
    };
    std::vector<Outcome> outcomes(packages.size());

    parallel_for(packages.size(), max_in_flight, [&](std::size_t p) {
        json topics = json::array();
        for (TopicId id : packages[p]) {
            const Topic& t = graph.topic(id);
            topics.push_back({{"id", to_string(id)},
                              {"entity", graph.entity(t.anchor_entity).name},
                              {"label", t.label},
                              {"description", t.description}});
        }
        ChatRequest req{TemplateId::FeatureExtraction,
                        {{"rules", sc.rules}, {"query", query}, {"topics", topics.dump(2)}}};
        auto& out = outcomes[p];
        try {
            const json reply = chat_json(backend, req, [](const json& j) {
                for (const auto& f : j.at("features")) {
                    if (!f.at("feature").is_string() || !f.at("usefulness").is_number()) {
                        throw Error(ErrorCode::BadResponse, "features need a string and a numeric usefulness");
                    }
                }
            });
            for (const auto& f : reply["features"]) {
                std::string textv = text::trim(f["feature"].get<std::string>());
                double u = f["usefulness"].get<double>();
                if (textv.empty() || !std::isfinite(u)) continue;
                if (u < 0.0 || u > 10.0) {
                    out.warnings.push_back("package " + std::to_string(p) + ": usefulness " + json(u).dump() +
                                           " clamped to [0, 10]");
                    u = std::clamp(u, 0.0, 10.0);
                }
                out.features.push_back({std::move(textv), u, p});
            }
        } catch (const Error& e) {
            out.features.clear();
            out.warnings.push_back("package " + std::to_string(p) + " skipped: " + e.what());
        }
    });

    std::vector<EvidenceFeature> features;
    for (auto& o : outcomes) {
        for (const auto& w : o.warnings) {
            spdlog::warn("{}", w);
            if (warnings) warnings->push_back(w);
        }
        std::move(o.features.begin(), o.features.end(), std::back_inserter(features));
    }
    return features;
}

std::vector<double> attention_weights(const EmbeddingVector& e, std::span<const EmbeddingVector> features) {
    if (features.empty()) throw Error(ErrorCode::NoFeatures, "no evidence features to attend over");
    std::vector<double> w(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) w[i] = e.cosine(features[i]);
    const double peak = *std::max_element(w.begin(), w.end());
    double total = 0.0;
    for (double& x : w) total += (x = std::exp(x - peak));
    for (double& x : w) x /= total;
    return w;
}

double attention_score(const EmbeddingVector& e, std::span<const EmbeddingVector> features,
                       std::span<const double> usefulness) {
    if (features.size() != usefulness.size()) {
        throw Error(ErrorCode::LengthMismatch, "feature and usefulness lists differ in length");
    }
    const auto w = attention_weights(e, features);
    double score = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) score += usefulness[i] * w[i];
    return score;
}

double score_evidence(const std::string& evidence_text, const std::vector<EvidenceFeature>& features,
                      EmbeddingBackend& embedder) {
    if (features.empty()) throw Error(ErrorCode::NoFeatures, "no evidence features to attend over");
    std::vector<EmbeddingVector> vecs;
    std::vector<double> us;
    for (const auto& f : features) {
        vecs.push_back(embedder.embed(f.text));
        us.push_back(f.usefulness);
    }
    return attention_score(embedder.embed(evidence_text), vecs, us);
}

// --- result --------------------------------------------------------------------

std::string RetrievalResult::context(const Hypergraph& graph) const {
    std::string out;
    for (const auto& e : evidence) out += graph.evidence(e.id).description + "\n";
    return out;
}

json RetrievalResult::to_json(const Hypergraph& graph) const {
    json linked_json = json::array();
    for (EntityId id : linked) linked_json.push_back({{"id", to_string(id)}, {"name", graph.entity(id).name}});
    json topics_json = json::array();
    for (TopicId id : topics) {
        const Topic& t = graph.topic(id);
        topics_json.push_back({{"id", to_string(id)},
                               {"entity", graph.entity(t.anchor_entity).name},
                               {"label", t.label},
                               {"frequency", frequencies.at(id)}});
    }
    json packages_json = json::array();
    for (const auto& p : packages) {
        json ids = json::array();
        for (TopicId id : p) ids.push_back(to_string(id));
        packages_json.push_back(ids);
    }
    json features_json = json::array();
    for (const auto& f : features) {
        features_json.push_back({{"feature", f.text}, {"usefulness", f.usefulness}, {"package", f.package}});
    }
    json evidence_json = json::array();
    for (const auto& e : evidence) {
        const Evidence& ev = graph.evidence(e.id);
        evidence_json.push_back({{"id", to_string(e.id)},
                                 {"score", e.score},
                                 {"label", ev.label},
                                 {"description", ev.description},
                                 {"document", ev.provenance.document_id},
                                 {"words", e.words}});
    }
    return {{"query", query},
            {"terms", terms},
            {"linked_entities", linked_json},
            {"topics", topics_json},
            {"packages", packages_json},
            {"features", features_json},
            {"evidence", evidence_json},
            {"truncation",
             {{"candidates", candidates},
              {"dropped_by_top_k", dropped_by_top_k},
              {"dropped_by_budget", dropped_by_budget},
              {"total_words", total_words}}},
            {"empty_reason", empty_reason ? json(*empty_reason) : json(nullptr)},
            {"warnings", warnings},
            {"usage", hyperrag::to_json(usage)}};
}

// --- retriever -------------------------------------------------------------------

Retriever::Retriever(const Hypergraph& graph, EmbeddingBackend& embedder)
    : graph_(graph), embedder_(embedder), view_(graph), linker_(graph, embedder) {}

RetrievalResult Retriever::retrieve(const std::string& query, const RetrievalConfig& cfg, const SearchCondition& sc,
                                    ChatBackend& chat, std::uint64_t seed) const {
    cfg.validate();
    MeteredChat meter(chat);
    RetrievalResult r;
    r.query = query;
    auto finish = [&](std::optional<std::string> reason) {
        r.empty_reason = std::move(reason);
        r.usage = meter.usage();
        return std::move(r);
    };

    r.terms = extract_search_words(query, meter, &r.warnings);
    r.linked = link_entities(r.terms, linker_, cfg.n_m);
    if (r.linked.empty()) return finish("no_entities_linked");

    TopicFrequencies f;
    try {
        switch (cfg.sampling) {
        case SamplingMode::RandomWalk:
            f = random_walk_topics(view_, r.linked, cfg.alpha, cfg.beta, derive_seed(seed, 1), cfg.uniform_transitions);
            break;
        case SamplingMode::Neighbor: f = neighbor_topics(view_, r.linked); break;
        case SamplingMode::Ppr: f = ppr_topics(view_, r.linked, cfg.ppr_restart, cfg.ppr_iterations); break;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::IsolatedSeeds) throw;
    }
    r.topics = select_topics(f, cfg.n_t);
    if (r.topics.empty()) return finish("no_topics_visited");
    for (TopicId t : r.topics) r.frequencies.emplace(t, f.at(t));
    r.packages = package_topics(r.topics, cfg.n_p, derive_seed(seed, 2));

    std::set<EvidenceId> pool;
    for (TopicId t : r.topics) {
        const auto& ids = graph_.topic(t).evidence_ids;
        pool.insert(ids.begin(), ids.end());
    }
    r.candidates = pool.size();

    std::vector<ScoredEvidence> scored;
    scored.reserve(pool.size());
    if (cfg.ranking == RankingMode::Attention) {
        r.features = extract_features(query, r.packages, graph_, sc, meter, cfg.max_in_flight, &r.warnings);
        if (r.features.empty()) return finish("no_features");
        std::vector<EmbeddingVector> vecs;
        std::vector<double> us;
        for (const auto& feat : r.features) {
            vecs.push_back(embedder_.embed(feat.text));
            us.push_back(feat.usefulness);
        }
        for (EvidenceId id : pool) {
            const auto& desc = graph_.evidence(id).description;
            scored.push_back({id, attention_score(embedder_.embed(desc), vecs, us), text::word_count(desc)});
        }
    } else {
        const EmbeddingVector q = embedder_.embed(query);
        for (EvidenceId id : pool) {
            const auto& desc = graph_.evidence(id).description;
            scored.push_back({id, q.cosine(embedder_.embed(desc)), text::word_count(desc)});
        }
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredEvidence& a, const ScoredEvidence& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });

    if (scored.size() > cfg.top_k) {
        r.dropped_by_top_k = scored.size() - cfg.top_k;
        scored.resize(cfg.top_k);
    }
    std::size_t keep = 0;
    for (; keep < scored.size(); ++keep) {
        if (r.total_words + scored[keep].words > cfg.context_budget) break;
        r.total_words += scored[keep].words;
    }
    r.dropped_by_budget = scored.size() - keep;
    scored.resize(keep);
    r.evidence = std::move(scored);
    return finish(std::nullopt);
}

} // namespace hyperrag
