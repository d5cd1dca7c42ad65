#include "hyperrag/relation_map.hpp"

#include "hyperrag/error.hpp"

namespace hyperrag {

HyperRelationMap::HyperRelationMap(std::map<std::string, std::set<std::string>> rules)
    : rules_(std::move(rules)) {
    if (rules_.empty()) throw Error(ErrorCode::InvalidConfig, "hyper-relation map is empty");
    for (const auto& [type, labels] : rules_) {
        if (labels.empty()) throw Error(ErrorCode::InvalidConfig, "keyword type '" + type + "' has no labels");
        labels_.insert(labels.begin(), labels.end());
    }
}

const HyperRelationMap& HyperRelationMap::standard() {
    static const HyperRelationMap map({
        {"disease", {"symptoms", "causes", "diagnosis", "treatment", "prognosis"}},
        {"drug",
         {"treatment", "usage", "adverse reactions", "contraindications", "drug interactions",
          "precautions"}},
    });
    return map;
}

bool HyperRelationMap::is_legal(const std::string& keyword_type, const std::string& label) const {
    const auto it = rules_.find(keyword_type);
    return it != rules_.end() && it->second.contains(label);
}

std::vector<std::string> HyperRelationMap::labels_for(const std::string& keyword_type) const {
    const auto it = rules_.find(keyword_type);
    if (it == rules_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

const std::set<std::string>& standard_entity_types() {
    static const std::set<std::string> types{"drug",      "disease", "symptom",   "test",
                                             "procedure", "anatomy", "population"};
    return types;
}

} // namespace hyperrag
