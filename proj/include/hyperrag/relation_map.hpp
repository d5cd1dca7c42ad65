#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace hyperrag {

/// Legal (keyword type, evidence label) pairs. The label catalog is the union
/// of all label sets.
class HyperRelationMap {
public:
    HyperRelationMap() = default;
    explicit HyperRelationMap(std::map<std::string, std::set<std::string>> rules);

    /// Drug and disease rules used throughout the medical corpus.
    static const HyperRelationMap& standard();

    bool is_legal(const std::string& keyword_type, const std::string& label) const;
    bool has_label(const std::string& label) const { return labels_.contains(label); }
    bool has_keyword_type(const std::string& type) const { return rules_.contains(type); }

    /// Labels for one keyword type in catalog order; empty for unknown types.
    std::vector<std::string> labels_for(const std::string& keyword_type) const;
    const std::set<std::string>& labels() const { return labels_; }
    const std::map<std::string, std::set<std::string>>& rules() const { return rules_; }

private:
    std::map<std::string, std::set<std::string>> rules_;
    std::set<std::string> labels_;
};

/// Entity types recognized during entity extraction.
const std::set<std::string>& standard_entity_types();

} // namespace hyperrag
