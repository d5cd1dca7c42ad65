#pragma once

#include "hyperrag/hypergraph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hyperrag {

/// Read-only topic/entity bipartite projection with CSR adjacency in both
/// directions. Dense indices follow ascending id order on each side, and every
/// neighbor list is ordered by (descending weight, ascending id).
class BipartiteView {
public:
    struct Neighbor {
        std::uint32_t index; // dense index on the opposite side
        double weight;
    };

    explicit BipartiteView(const Hypergraph& graph);

    std::size_t topic_count() const noexcept { return topic_ids_.size(); }
    std::size_t entity_count() const noexcept { return entity_ids_.size(); }
    std::size_t node_count() const noexcept { return topic_count() + entity_count(); }
    std::size_t edge_count() const noexcept { return topic_adj_.size(); }

    TopicId topic_id(std::size_t index) const { return topic_ids_.at(index); }
    EntityId entity_id(std::size_t index) const { return entity_ids_.at(index); }
    std::optional<std::size_t> topic_index(TopicId id) const;
    std::optional<std::size_t> entity_index(EntityId id) const;

    std::span<const Neighbor> topic_neighbors(std::size_t topic) const;
    std::span<const Neighbor> entity_neighbors(std::size_t entity) const;

    /// Running sums of entity_neighbors(entity) weights, for proportional sampling.
    std::span<const double> entity_cumulative(std::size_t entity) const;
    std::span<const double> topic_cumulative(std::size_t topic) const;

private:
    std::vector<TopicId> topic_ids_;
    std::vector<EntityId> entity_ids_;

    std::vector<std::size_t> topic_offsets_;
    std::vector<Neighbor> topic_adj_;
    std::vector<double> topic_cum_;

    std::vector<std::size_t> entity_offsets_;
    std::vector<Neighbor> entity_adj_;
    std::vector<double> entity_cum_;
};

} // namespace hyperrag
