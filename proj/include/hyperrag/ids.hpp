#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

namespace hyperrag {

/// Strongly typed numeric identifier. Ordering is by value, which is the
/// tie-break order used everywhere results must be deterministic.
template <class Tag>
struct Id {
    static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();

    std::uint32_t value = kInvalid;

    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) : value(v) {}

    constexpr bool valid() const noexcept { return value != kInvalid; }
    friend constexpr auto operator<=>(Id, Id) = default;
};

struct EntityTag {};
struct TopicTag {};
struct EvidenceTag {};

using EntityId = Id<EntityTag>;
using TopicId = Id<TopicTag>;
using EvidenceId = Id<EvidenceTag>;

inline std::string to_string(EntityId id) { return "m" + std::to_string(id.value); }
inline std::string to_string(TopicId id) { return "t" + std::to_string(id.value); }
inline std::string to_string(EvidenceId id) { return "e" + std::to_string(id.value); }

} // namespace hyperrag

template <class Tag>
struct std::hash<hyperrag::Id<Tag>> {
    std::size_t operator()(hyperrag::Id<Tag> id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
