#include "hyperrag/hypergraph.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/text.hpp"

#include <algorithm>

namespace hyperrag {

std::string_view to_string(Violation::Kind kind) noexcept {
    switch (kind) {
    case Violation::Kind::WeightMismatch: return "WeightMismatch";
    case Violation::Kind::MissingEdge: return "MissingEdge";
    case Violation::Kind::ZeroWeight: return "ZeroWeight";
    case Violation::Kind::LabelMismatch: return "LabelMismatch";
    case Violation::Kind::ForeignEvidence: return "ForeignEvidence";
    case Violation::Kind::EmptyTopic: return "EmptyTopic";
    case Violation::Kind::IncidenceMismatch: return "IncidenceMismatch";
    case Violation::Kind::IllegalLabelPair: return "IllegalLabelPair";
    case Violation::Kind::DanglingReference: return "DanglingReference";
    case Violation::Kind::DuplicateName: return "DuplicateName";
    }
    return "Unknown";
}

Hypergraph::Hypergraph(HyperRelationMap relations, std::set<std::string> entity_types)
    : relations_(std::move(relations)),
      entity_types_(entity_types.empty() ? standard_entity_types() : std::move(entity_types)) {}

void Hypergraph::require_mutable() const {
    if (frozen_) throw Error(ErrorCode::GraphFrozen, "graph is frozen");
}

EvidenceId Hypergraph::add_evidence(Evidence ev) {
    require_mutable();
    if (ev.description.empty()) throw Error(ErrorCode::EmptyInput, "evidence description is empty");
    if (!relations_.has_label(ev.label)) {
        throw Error(ErrorCode::IllegalLabelPair, "label '" + ev.label + "' is not in the label catalog");
    }
    if (!relations_.is_legal(ev.anchor_type, ev.label)) {
        throw Error(ErrorCode::IllegalLabelPair,
                    "(" + ev.anchor_type + ", " + ev.label + ") is not a legal hyper-relation");
    }
    if (!ev.id.valid()) ev.id = EvidenceId{next_evidence_};
    if (evidence_.contains(ev.id)) throw Error(ErrorCode::DuplicateId, to_string(ev.id) + " already stored");
    next_evidence_ = std::max(next_evidence_, ev.id.value + 1);
    const EvidenceId id = ev.id;
    evidence_.emplace(id, std::move(ev));
    evidence_entities_[id];
    return id;
}

EntityId Hypergraph::link_entity(EvidenceId ev, std::string_view raw_name, std::string_view type) {
    require_mutable();
    if (!evidence_.contains(ev)) throw Error(ErrorCode::UnknownId, to_string(ev));
    std::string name = text::fold(raw_name);
    if (name.empty()) throw Error(ErrorCode::EmptyInput, "entity name is empty");

    EntityId id;
    if (const auto it = entity_by_name_.find(name); it != entity_by_name_.end()) {
        id = it->second;
    } else {
        id = EntityId{next_entity_++};
        entity_by_name_.emplace(name, id);
        entities_.emplace(id, Entity{id, std::move(name), std::string(type), {}});
    }
    if (entities_.at(id).evidence_ids.insert(ev).second) {
        evidence_entities_[ev].insert(id);
        for (TopicId t : evidence_topics_[ev]) relink_topic(topics_.at(t));
    }
    return id;
}

TopicId Hypergraph::add_topic(Topic topic) {
    require_mutable();
    if (topic.evidence_ids.empty()) throw Error(ErrorCode::EmptyTopic, "topic has no evidence");
    const auto anchor = entities_.find(topic.anchor_entity);
    if (anchor == entities_.end()) throw Error(ErrorCode::UnknownId, to_string(topic.anchor_entity));
    for (EvidenceId e : topic.evidence_ids) {
        const auto it = evidence_.find(e);
        if (it == evidence_.end()) throw Error(ErrorCode::UnknownId, to_string(e));
        if (it->second.label != topic.label) {
            throw Error(ErrorCode::LabelMismatch,
                        to_string(e) + " has label '" + it->second.label + "', topic has '" + topic.label + "'");
        }
        if (!anchor->second.evidence_ids.contains(e)) {
            throw Error(ErrorCode::ForeignEvidence, to_string(e) + " is not in E_m of " + anchor->second.name);
        }
    }
    if (!topic.id.valid()) topic.id = TopicId{next_topic_};
    if (topics_.contains(topic.id)) throw Error(ErrorCode::DuplicateId, to_string(topic.id) + " already stored");
    next_topic_ = std::max(next_topic_, topic.id.value + 1);

    const TopicId id = topic.id;
    for (EvidenceId e : topic.evidence_ids) evidence_topics_[e].insert(id);
    const auto& stored = topics_.emplace(id, std::move(topic)).first->second;
    relink_topic(stored);
    return id;
}

void Hypergraph::relink_topic(const Topic& t) {
    auto first = weights_.lower_bound(EdgeKey{t.id, EntityId{0}});
    while (first != weights_.end() && first->first.topic == t.id) first = weights_.erase(first);

    std::map<EntityId, std::uint32_t> counts;
    for (EvidenceId e : t.evidence_ids) {
        for (EntityId m : evidence_entities_[e]) ++counts[m];
    }
    const auto den = static_cast<std::uint32_t>(t.evidence_ids.size());
    for (const auto& [m, num] : counts) weights_.emplace(EdgeKey{t.id, m}, Fraction{num, den});
}

std::size_t Hypergraph::link_all_topics() {
    require_mutable();
    weights_.clear();
    for (const auto& [id, t] : topics_) relink_topic(t);
    return weights_.size();
}

Fraction Hypergraph::topic_entity_fraction(TopicId t, EntityId m) const {
    const Topic& tp = topic(t);
    const Entity& en = entity(m);
    if (tp.evidence_ids.empty()) throw Error(ErrorCode::EmptyTopic, to_string(t));
    std::uint32_t num = 0;
    for (EvidenceId e : tp.evidence_ids) {
        if (en.evidence_ids.contains(e)) ++num;
    }
    return Fraction{num, static_cast<std::uint32_t>(tp.evidence_ids.size())};
}

const std::set<EntityId>& Hypergraph::entities_of(EvidenceId ev) const {
    static const std::set<EntityId> empty;
    const auto it = evidence_entities_.find(ev);
    return it == evidence_entities_.end() ? empty : it->second;
}

const Entity& Hypergraph::entity(EntityId id) const {
    const auto it = entities_.find(id);
    if (it == entities_.end()) throw Error(ErrorCode::UnknownId, to_string(id));
    return it->second;
}

const Topic& Hypergraph::topic(TopicId id) const {
    const auto it = topics_.find(id);
    if (it == topics_.end()) throw Error(ErrorCode::UnknownId, to_string(id));
    return it->second;
}

const Evidence& Hypergraph::evidence(EvidenceId id) const {
    const auto it = evidence_.find(id);
    if (it == evidence_.end()) throw Error(ErrorCode::UnknownId, to_string(id));
    return it->second;
}

std::optional<EntityId> Hypergraph::find_entity(std::string_view name) const {
    const auto it = entity_by_name_.find(text::fold(name));
    if (it == entity_by_name_.end()) return std::nullopt;
    return it->second;
}

std::vector<Violation> Hypergraph::audit() const {
    using K = Violation::Kind;
    std::vector<Violation> out;
    auto report = [&](K kind, std::string record, std::string message) {
        out.push_back({kind, std::move(record), std::move(message)});
    };

    for (const auto& [id, ev] : evidence_) {
        if (!relations_.is_legal(ev.anchor_type, ev.label)) {
            report(K::IllegalLabelPair, to_string(id), "(" + ev.anchor_type + ", " + ev.label + ") not legal");
        }
    }

    std::set<std::string> names;
    for (const auto& [id, en] : entities_) {
        if (en.name.empty() || !names.insert(en.name).second) {
            report(K::DuplicateName, to_string(id), "name '" + en.name + "' empty or not unique");
        }
        for (EvidenceId e : en.evidence_ids) {
            if (!evidence_.contains(e)) {
                report(K::DanglingReference, to_string(id), "references missing " + to_string(e));
                continue;
            }
            const auto it = evidence_entities_.find(e);
            if (it == evidence_entities_.end() || !it->second.contains(id)) {
                report(K::IncidenceMismatch, to_string(id), to_string(e) + " in E_m but entity not in f(e)");
            }
        }
    }
    for (const auto& [e, ms] : evidence_entities_) {
        for (EntityId m : ms) {
            const auto it = entities_.find(m);
            if (it == entities_.end() || !it->second.evidence_ids.contains(e)) {
                report(K::IncidenceMismatch, to_string(e), to_string(m) + " in f(e) but evidence not in E_m");
            }
        }
    }

    for (const auto& [id, tp] : topics_) {
        if (tp.evidence_ids.empty()) report(K::EmptyTopic, to_string(id), "topic has no evidence");
        const auto anchor = entities_.find(tp.anchor_entity);
        if (anchor == entities_.end()) {
            report(K::DanglingReference, to_string(id), "anchor " + to_string(tp.anchor_entity) + " missing");
        }
        for (EvidenceId e : tp.evidence_ids) {
            const auto it = evidence_.find(e);
            if (it == evidence_.end()) {
                report(K::DanglingReference, to_string(id), "references missing " + to_string(e));
                continue;
            }
            if (it->second.label != tp.label) {
                report(K::LabelMismatch, to_string(id),
                       to_string(e) + " label '" + it->second.label + "' != '" + tp.label + "'");
            }
            if (anchor != entities_.end() && !anchor->second.evidence_ids.contains(e)) {
                report(K::ForeignEvidence, to_string(id), to_string(e) + " not in anchor's E_m");
            }
        }
    }

    // Recompute every positive weight from incidence and compare exactly.
    std::map<EdgeKey, Fraction> expected;
    for (const auto& [id, tp] : topics_) {
        const auto den = static_cast<std::uint32_t>(tp.evidence_ids.size());
        for (EvidenceId e : tp.evidence_ids) {
            const auto it = evidence_entities_.find(e);
            if (it == evidence_entities_.end()) continue;
            for (EntityId m : it->second) {
                auto& f = expected[EdgeKey{id, m}];
                f.den = den;
                ++f.num;
            }
        }
    }
    for (const auto& [key, w] : weights_) {
        const std::string record = to_string(key.topic) + "-" + to_string(key.entity);
        if (w.num == 0 || w.den == 0) {
            report(K::ZeroWeight, record, "stored weight must be in (0, 1]");
            continue;
        }
        const auto it = expected.find(key);
        if (it == expected.end()) {
            report(K::WeightMismatch, record,
                   "stored " + std::to_string(w.num) + "/" + std::to_string(w.den) + ", recount is 0");
        } else if (!(it->second == w)) {
            report(K::WeightMismatch, record,
                   "stored " + std::to_string(w.num) + "/" + std::to_string(w.den) + ", recount " +
                       std::to_string(it->second.num) + "/" + std::to_string(it->second.den));
        }
    }
    for (const auto& [key, w] : expected) {
        if (!weights_.contains(key)) {
            report(K::MissingEdge, to_string(key.topic) + "-" + to_string(key.entity),
                   "positive weight " + std::to_string(w.num) + "/" + std::to_string(w.den) + " not stored");
        }
    }
    return out;
}

bool operator==(const Hypergraph& a, const Hypergraph& b) {
    return a.entities_ == b.entities_ && a.topics_ == b.topics_ && a.evidence_ == b.evidence_ &&
           a.weights_ == b.weights_;
}

} // namespace hyperrag
