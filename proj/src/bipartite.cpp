#include "hyperrag/bipartite.hpp"

#include <algorithm>

namespace hyperrag {

namespace {

void build_csr(std::size_t nodes, std::vector<std::vector<BipartiteView::Neighbor>>& lists,
               std::vector<std::size_t>& offsets, std::vector<BipartiteView::Neighbor>& adj,
               std::vector<double>& cum) {
    offsets.assign(nodes + 1, 0);
    for (std::size_t i = 0; i < nodes; ++i) {
        auto& l = lists[i];
        std::sort(l.begin(), l.end(), [](const auto& a, const auto& b) {
            return a.weight != b.weight ? a.weight > b.weight : a.index < b.index;
        });
        offsets[i + 1] = offsets[i] + l.size();
        double running = 0.0;
        for (const auto& n : l) {
            adj.push_back(n);
            running += n.weight;
            cum.push_back(running);
        }
    }
}

} // namespace

BipartiteView::BipartiteView(const Hypergraph& graph) {
    topic_ids_.reserve(graph.topics().size());
    for (const auto& [id, t] : graph.topics()) topic_ids_.push_back(id);
    entity_ids_.reserve(graph.entities().size());
    for (const auto& [id, m] : graph.entities()) entity_ids_.push_back(id);

    std::vector<std::vector<Neighbor>> by_topic(topic_ids_.size());
    std::vector<std::vector<Neighbor>> by_entity(entity_ids_.size());
    for (const auto& [key, w] : graph.weights()) {
        const auto t = static_cast<std::uint32_t>(*topic_index(key.topic));
        const auto m = static_cast<std::uint32_t>(*entity_index(key.entity));
        const double value = w.value();
        by_topic[t].push_back({m, value});
        by_entity[m].push_back({t, value});
    }
    build_csr(topic_ids_.size(), by_topic, topic_offsets_, topic_adj_, topic_cum_);
    build_csr(entity_ids_.size(), by_entity, entity_offsets_, entity_adj_, entity_cum_);
}

std::optional<std::size_t> BipartiteView::topic_index(TopicId id) const {
    const auto it = std::lower_bound(topic_ids_.begin(), topic_ids_.end(), id);
    if (it == topic_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - topic_ids_.begin());
}

std::optional<std::size_t> BipartiteView::entity_index(EntityId id) const {
    const auto it = std::lower_bound(entity_ids_.begin(), entity_ids_.end(), id);
    if (it == entity_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - entity_ids_.begin());
}

std::span<const BipartiteView::Neighbor> BipartiteView::topic_neighbors(std::size_t topic) const {
    return {topic_adj_.data() + topic_offsets_.at(topic), topic_offsets_.at(topic + 1) - topic_offsets_[topic]};
}

std::span<const BipartiteView::Neighbor> BipartiteView::entity_neighbors(std::size_t entity) const {
    return {entity_adj_.data() + entity_offsets_.at(entity),
            entity_offsets_.at(entity + 1) - entity_offsets_[entity]};
}

std::span<const double> BipartiteView::entity_cumulative(std::size_t entity) const {
    return {entity_cum_.data() + entity_offsets_.at(entity),
            entity_offsets_.at(entity + 1) - entity_offsets_[entity]};
}

std::span<const double> BipartiteView::topic_cumulative(std::size_t topic) const {
    return {topic_cum_.data() + topic_offsets_.at(topic), topic_offsets_.at(topic + 1) - topic_offsets_[topic]};
}

} // namespace hyperrag
