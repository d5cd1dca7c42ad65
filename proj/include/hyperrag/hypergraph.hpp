#pragma once

#include "hyperrag/ids.hpp"
#include "hyperrag/relation_map.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace hyperrag {

struct Provenance {
    std::string document_id;
    std::uint32_t chunk_index = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Lower-tier hyperedge: one labelled statement extracted from a text unit.
struct Evidence {
    EvidenceId id;
    std::string description;
    std::string label;
    std::string anchor_keyword;
    std::string anchor_type;
    Provenance provenance;

    friend bool operator==(const Evidence&, const Evidence&) = default;
};

/// Node. `name` is the case-folded normalized term and the dedup key.
struct Entity {
    EntityId id;
    std::string name;
    std::string type;
    std::set<EvidenceId> evidence_ids;

    friend bool operator==(const Entity&, const Entity&) = default;
};

/// Higher-tier hyperedge: same-label evidence summarized around one entity.
struct Topic {
    TopicId id;
    std::string description;
    std::string label;
    EntityId anchor_entity;
    std::set<EvidenceId> evidence_ids;

    friend bool operator==(const Topic&, const Topic&) = default;
};

/// Exact topic-entity weight. Stored as a fraction so audits need no tolerance.
struct Fraction {
    std::uint32_t num = 0;
    std::uint32_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct Violation {
    enum class Kind {
        WeightMismatch,
        MissingEdge,
        ZeroWeight,
        LabelMismatch,
        ForeignEvidence,
        EmptyTopic,
        IncidenceMismatch,
        IllegalLabelPair,
        DanglingReference,
        DuplicateName,
    };

    Kind kind;
    std::string record;
    std::string message;
};

std::string_view to_string(Violation::Kind kind) noexcept;

struct EdgeKey {
    TopicId topic;
    EntityId entity;

    friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

class Hypergraph {
public:
    explicit Hypergraph(HyperRelationMap relations = HyperRelationMap::standard(),
                        std::set<std::string> entity_types = {});

    // --- build phase -------------------------------------------------------

    /// Stores `ev`. An invalid id is replaced by the next free id.
    EvidenceId add_evidence(Evidence ev);

    /// Records that `name` was extracted from evidence `ev` (one f(e) member).
    /// Creates the entity on first sight; its type is the first one seen.
    EntityId link_entity(EvidenceId ev, std::string_view name, std::string_view type);

    /// Stores a topic after checking the label-homogeneity and membership rules.
    TopicId add_topic(Topic topic);

    /// Recomputes every topic-entity weight; only positive pairs are kept.
    std::size_t link_all_topics();

    /// Disallows further mutation. Readers may share the graph freely afterwards.
    void freeze() noexcept { frozen_ = true; }
    bool frozen() const noexcept { return frozen_; }

    // --- queries -----------------------------------------------------------

    Fraction topic_entity_fraction(TopicId t, EntityId m) const;
    double compute_topic_entity_weight(TopicId t, EntityId m) const {
        return topic_entity_fraction(t, m).value();
    }

    /// f(e): entities extracted from one evidence, ascending id.
    const std::set<EntityId>& entities_of(EvidenceId ev) const;

    const Entity& entity(EntityId id) const;
    const Topic& topic(TopicId id) const;
    const Evidence& evidence(EvidenceId id) const;
    std::optional<EntityId> find_entity(std::string_view name) const;

    const std::map<EntityId, Entity>& entities() const { return entities_; }
    const std::map<TopicId, Topic>& topics() const { return topics_; }
    const std::map<EvidenceId, Evidence>& evidence() const { return evidence_; }
    const std::map<EdgeKey, Fraction>& weights() const { return weights_; }

    const HyperRelationMap& relations() const { return relations_; }
    const std::set<std::string>& entity_types() const { return entity_types_; }

    /// Reports every broken invariant. Never throws.
    std::vector<Violation> audit() const;

    /// Structural equality on the canonical form (ids, records, weights).
    friend bool operator==(const Hypergraph& a, const Hypergraph& b);

private:
    friend class GraphLoader;

    void require_mutable() const;
    void relink_topic(const Topic& t);

    HyperRelationMap relations_;
    std::set<std::string> entity_types_;

    std::map<EntityId, Entity> entities_;
    std::map<TopicId, Topic> topics_;
    std::map<EvidenceId, Evidence> evidence_;
    std::map<EdgeKey, Fraction> weights_;

    std::unordered_map<std::string, EntityId> entity_by_name_;
    std::map<EvidenceId, std::set<EntityId>> evidence_entities_;
    std::map<EvidenceId, std::set<TopicId>> evidence_topics_;

    std::uint32_t next_entity_ = 0;
    std::uint32_t next_topic_ = 0;
    std::uint32_t next_evidence_ = 0;
    bool frozen_ = false;
};

} // namespace hyperrag
