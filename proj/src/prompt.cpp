#include "hyperrag/backend/prompt.hpp"

#include "hyperrag/error.hpp"

namespace hyperrag {

namespace {

std::vector<PromptTemplate> build_catalog() {
    return {
        {TemplateId::KeywordExtraction, "keyword_extraction",
         "Identify the drugs and diseases this document is about.\n"
         "Title: {title}\nAbstract: {abstract}\n"
         "Reply with JSON only: {\"keywords\": [{\"keyword\": string, \"type\": \"drug\"|\"disease\"}]}",
         {"title", "abstract"}},
        {TemplateId::EvidenceExtraction, "evidence_extraction",
         "From the passage below, copy every self-contained statement about the {label} of {keyword}. "
         "Keep conditions and qualifiers intact; do not split one statement into several.\n"
         "Passage:\n{content}\n"
         "Reply with JSON only: {\"evidence\": [string]}. Use an empty list when nothing applies.",
         {"keyword", "label", "content"}},
        {TemplateId::EntityExtraction, "entity_extraction",
         "List the medical entities mentioned in the statement. Allowed types: {entity_types}. "
         "Give each entity its standard subject-heading name; if one mention covers several headings, "
         "list each heading separately.\nStatement: {evidence}\n"
         "Reply with JSON only: {\"entities\": [{\"name\": string, \"type\": string}]}",
         {"entity_types", "evidence"}},
        {TemplateId::TopicSummary, "topic_summary",
         "Summarize what the statements below say about the {label} of {entity} in a short paragraph.\n"
         "Statements:\n{evidence}",
         {"entity", "label", "evidence"}},
        {TemplateId::TopicMerge, "topic_merge",
         "Combine the partial summaries below into one paragraph on the {label} of {entity}.\n"
         "Partial summaries:\n{summaries}",
         {"entity", "label", "summaries"}},
        {TemplateId::SearchWords, "search_words",
         "Write at least five short search terms (medical entities or phrases) that would find evidence "
         "needed to answer the query.\nQuery: {query}\n"
         "Reply with JSON only: {\"terms\": [string]}",
         {"query"}},
        {TemplateId::FeatureExtraction, "feature_extraction",
         "You are selecting evidence for a query. Rules:\n{rules}\n"
         "Query: {query}\nCandidate topics (JSON):\n{topics}\n"
         "Describe the aspects of these topics that matter for the query and rate each aspect's "
         "usefulness from 0 to 10 following the rules.\n"
         "Reply with JSON only: {\"features\": [{\"feature\": string, \"usefulness\": number}]}",
         {"rules", "query", "topics"}},
        {TemplateId::AnswerGeneration, "answer_generation",
         "Answer the question using the evidence.\nEvidence:\n{evidence}\nQuestion: {question}\n{options}",
         {"evidence", "question", "options"}},
        {TemplateId::JudgeKeypoints, "judge_keypoints",
         "Question: {question}\nResponse: {candidate}\nKey points (JSON list): {keypoints}\n"
         "For each key point in order, state whether the response covers it and whether it contradicts it.\n"
         "Reply with JSON only: {\"verdicts\": [{\"covered\": bool, \"contradicted\": bool}]}",
         {"question", "candidate", "keypoints"}},
        {TemplateId::JudgeCompare, "judge_compare",
         "Question: {question}\nReference answer: {reference}\n"
         "Retrieved documents A:\n{a}\nRetrieved documents B:\n{b}\n"
         "Criterion: {axis}. For recall, prefer the set that covers more of the reference answer. "
         "For precision, prefer the set with less irrelevant or misleading content.\n"
         "Reply with JSON only: {\"winner\": \"A\"|\"B\"|\"tie\"}",
         {"question", "reference", "a", "b", "axis"}},
        {TemplateId::JudgeUsefulness, "judge_usefulness",
         "Question: {question}\nReference answer: {reference}\nRetrieved documents:\n{candidate}\n"
         "Rate from 0 to 10 how useful the documents are for answering the question.\n"
         "Reply with JSON only: {\"score\": integer}",
         {"question", "reference", "candidate"}},
    };
}

} // namespace

const std::vector<PromptTemplate>& prompt_catalog() {
    static const std::vector<PromptTemplate> catalog = build_catalog();
    return catalog;
}

const PromptTemplate& prompt_template(TemplateId id) {
    for (const auto& t : prompt_catalog()) {
        if (t.id == id) return t;
    }
    throw Error(ErrorCode::UnknownTemplate, "template id " + std::to_string(static_cast<int>(id)));
}

std::optional<TemplateId> template_from_name(std::string_view name) {
    for (const auto& t : prompt_catalog()) {
        if (t.name == name) return t.id;
    }
    return std::nullopt;
}

std::string_view to_string(TemplateId id) { return prompt_template(id).name; }

std::string render(const ChatRequest& request) {
    const auto& tpl = prompt_template(request.template_id);
    for (const auto& slot : tpl.slots) {
        if (!request.bindings.contains(slot)) {
            throw Error(ErrorCode::UnboundSlot, std::string(tpl.name) + ": slot '" + slot + "' is not bound");
        }
    }
    std::string out;
    const std::string_view text = tpl.text;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const auto close = text.find('}', open);
        const auto name = close == std::string_view::npos ? std::string_view{} : text.substr(open + 1, close - open - 1);
        const auto it = request.bindings.find(std::string(name));
        out.append(text.substr(pos, open - pos));
        if (it != request.bindings.end()) {
            out.append(it->second);
            pos = close + 1;
        } else {
            // JSON braces in the format description are literal text.
            out.push_back('{');
            pos = open + 1;
        }
    }
    if (request.reprompt) out.append("\n\nYour previous reply was not usable. Follow the format exactly and reply with the JSON object only.");
    return out;
}

} // namespace hyperrag
