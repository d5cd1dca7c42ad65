#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hyperrag {

enum class TemplateId {
    KeywordExtraction,
    EvidenceExtraction,
    EntityExtraction,
    TopicSummary,
    TopicMerge,
    SearchWords,
    FeatureExtraction,
    AnswerGeneration,
    JudgeKeypoints,
    JudgeCompare,
    JudgeUsefulness,
};

struct PromptTemplate {
    TemplateId id;
    std::string_view name;
    std::string_view text; // slots written as {name}
    std::vector<std::string> slots;
};

const std::vector<PromptTemplate>& prompt_catalog();
const PromptTemplate& prompt_template(TemplateId id);
std::optional<TemplateId> template_from_name(std::string_view name);
std::string_view to_string(TemplateId id);

struct ChatRequest {
    TemplateId template_id = TemplateId::KeywordExtraction;
    std::map<std::string, std::string> bindings;
    double temperature = 0.0;
    int max_tokens = 1024;
    /// Set on the single retry after an unparseable structured reply.
    bool reprompt = false;
};

/// Fills every slot; throws UnboundSlot if one is missing.
std::string render(const ChatRequest& request);

} // namespace hyperrag
