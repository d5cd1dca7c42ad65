#pragma once

#include "hyperrag/hypergraph.hpp"
#include "hyperrag/rng.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hyperrag::testing {

inline std::filesystem::path fixture_dir() { return HYPERRAG_FIXTURE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline Evidence make_evidence(std::string desc, std::string label = "treatment", std::string type = "drug",
                              std::string keyword = "aspirin") {
    Evidence ev;
    ev.description = std::move(desc);
    ev.label = std::move(label);
    ev.anchor_type = std::move(type);
    ev.anchor_keyword = std::move(keyword);
    ev.provenance = {"doc", 0};
    return ev;
}

/// Incidence rows for a random graph, kept independently of the Hypergraph so
/// tests can recount from them.
struct RandomGraph {
    Hypergraph graph;
    std::vector<std::vector<std::size_t>> evidence_entities; // f(e) as entity name indices
    std::vector<std::string> evidence_labels;
    std::vector<std::string> names;
};

/// Random drug-anchored graph: `n_evidence` statements over two labels, each
/// mentioning 0..3 of `n_names` entities, then one topic per (entity, label).
inline RandomGraph random_graph(std::uint64_t seed, std::size_t n_evidence, std::size_t n_names) {
    Rng rng(seed);
    RandomGraph r;
    for (std::size_t i = 0; i < n_names; ++i) r.names.push_back("entity " + std::to_string(i));
    const char* labels[] = {"treatment", "usage"};
    for (std::size_t i = 0; i < n_evidence; ++i) {
        const std::string label = labels[rng.below(2)];
        const EvidenceId id = r.graph.add_evidence(make_evidence("statement " + std::to_string(i), label));
        r.evidence_labels.push_back(label);
        std::vector<std::size_t> mentioned;
        const auto k = rng.below(4);
        for (std::uint64_t j = 0; j < k; ++j) {
            const auto m = static_cast<std::size_t>(rng.below(n_names));
            r.graph.link_entity(id, r.names[m], "drug");
            mentioned.push_back(m);
        }
        r.evidence_entities.push_back(std::move(mentioned));
    }
    for (const auto& [mid, m] : std::map(r.graph.entities())) {
        std::map<std::string, std::set<EvidenceId>> by_label;
        for (EvidenceId e : m.evidence_ids) by_label[r.graph.evidence(e).label].insert(e);
        for (auto& [label, ids] : by_label) {
            Topic t;
            t.label = label;
            t.anchor_entity = mid;
            t.description = m.name + " " + label;
            t.evidence_ids = std::move(ids);
            r.graph.add_topic(std::move(t));
        }
    }
    r.graph.link_all_topics();
    return r;
}

/// Seed entity "seed" joined to topic A with weight a/den and topic B with
/// weight b/den. Each topic has `den` evidence and its own anchor entity.
struct StarGraph {
    Hypergraph graph;
    EntityId seed;
    TopicId a, b;
};

inline StarGraph star_graph(std::uint32_t a, std::uint32_t b, std::uint32_t den) {
    StarGraph s;
    auto topic = [&](const std::string& anchor, std::uint32_t hits) {
        Topic t;
        t.label = "treatment";
        t.description = anchor;
        for (std::uint32_t i = 0; i < den; ++i) {
            const EvidenceId e = s.graph.add_evidence(make_evidence(anchor + " " + std::to_string(i)));
            t.anchor_entity = s.graph.link_entity(e, anchor, "drug");
            if (i < hits) s.seed = s.graph.link_entity(e, "seed", "disease");
            t.evidence_ids.insert(e);
        }
        return s.graph.add_topic(std::move(t));
    };
    s.a = topic("anchor a", a);
    s.b = topic("anchor b", b);
    s.graph.link_all_topics();
    s.graph.freeze();
    return s;
}

} // namespace hyperrag::testing
