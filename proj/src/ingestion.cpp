#include "hyperrag/ingestion.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/parallel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace hyperrag {

using nlohmann::json;

// --- documents ---------------------------------------------------------------

Document parse_document(const json& j, const std::string& fallback_id) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "document must be a JSON object");
    Document d;
    d.id = j.value("id", fallback_id);
    d.title = j.value("title", "");
    d.abstract = j.value("abstract", "");
    d.body = j.value("body", "");
    d.lang = j.value("lang", "");
    if (d.id.empty()) throw Error(ErrorCode::InvalidConfig, "document without id");
    return d;
}

std::vector<Document> load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::InvalidConfig, "corpus directory not found: " + dir.string());
    }
    std::vector<Document> docs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidConfig, entry.path().string() + ": " + e.what());
        }
        docs.push_back(parse_document(j, entry.path().stem().string()));
    }
    if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "no *.json documents in " + dir.string());
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    return docs;
}

// --- config and normalization --------------------------------------------------

void IngestionConfig::validate() const {
    if (window == 0) throw Error(ErrorCode::InvalidConfig, "window must be positive");
    if (overlap >= window) throw Error(ErrorCode::InvalidConfig, "overlap must be smaller than window");
    if (summary_batch == 0) throw Error(ErrorCode::InvalidConfig, "summary batch must be positive");
}

NormalizationTable NormalizationTable::load(const std::filesystem::path& tsv) {
    std::ifstream in(tsv);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read normalization table " + tsv.string());
    NormalizationTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        t.add(line.substr(0, tab), line.substr(tab + 1));
    }
    return t;
}

void NormalizationTable::add(std::string_view raw, std::string_view normalized) {
    const std::string key = text::fold(raw);
    std::string value = text::fold(normalized);
    if (key.empty() || value.empty()) return;
    auto& terms = table_[key];
    if (std::find(terms.begin(), terms.end(), value) == terms.end()) terms.push_back(std::move(value));
}

std::vector<std::string> NormalizationTable::normalize(std::string_view raw) const {
    std::string key = text::fold(raw);
    if (const auto it = table_.find(key); it != table_.end()) return it->second;
    if (key.empty()) return {};
    return {std::move(key)};
}

// --- splitting -----------------------------------------------------------------

std::vector<TextUnit> split_document(const Document& doc, const IngestionConfig& cfg) {
    cfg.validate();
    const auto tokens = text::tokenize(doc.body, cfg.tokenizer);
    if (tokens.empty()) throw Error(ErrorCode::EmptyDocument, "document " + doc.id + " has an empty body");

    std::vector<TextUnit> units;
    for (std::size_t start = 0;; start += cfg.stride()) {
        const std::size_t end = std::min(start + cfg.window, tokens.size());
        TextUnit u;
        u.document_id = doc.id;
        u.chunk_index = static_cast<std::uint32_t>(units.size());
        u.token_begin = start;
        u.token_end = end;
        u.content = doc.body.substr(tokens[start].begin, tokens[end - 1].end - tokens[start].begin);
        units.push_back(std::move(u));
        if (end == tokens.size()) break;
    }
    return units;
}

// --- extraction ----------------------------------------------------------------

std::vector<Keyword> extract_document_keywords(const Document& doc, ChatBackend& backend,
                                               const HyperRelationMap& relations, std::vector<std::string>* warnings) {
    ChatRequest req{TemplateId::KeywordExtraction, {{"title", doc.title}, {"abstract", doc.abstract}}};
    const json reply = chat_json(backend, req, [](const json& j) {
        for (const auto& k : j.at("keywords")) {
            if (!k.at("keyword").is_string() || !k.at("type").is_string()) {
                throw Error(ErrorCode::BadResponse, "keyword entries need string keyword and type");
            }
        }
    });

    std::vector<Keyword> out;
    std::set<std::string> seen;
    for (const auto& k : reply["keywords"]) {
        Keyword kw{text::trim(k["keyword"].get<std::string>()), text::fold(k["type"].get<std::string>())};
        if (kw.text.empty()) continue;
        if (!relations.has_keyword_type(kw.type)) {
            const std::string msg = doc.id + ": dropped keyword '" + kw.text + "' with unknown type '" + kw.type + "'";
            spdlog::warn("{}", msg);
            if (warnings) warnings->push_back(msg);
            continue;
        }
        if (seen.insert(text::fold(kw.text)).second) out.push_back(std::move(kw));
    }
    if (out.empty()) throw Error(ErrorCode::NoKeywords, "no usable keywords in document " + doc.id);
    return out;
}

std::vector<Evidence> extract_evidence(const TextUnit& unit, const Keyword& keyword, const std::string& label,
                                       ChatBackend& backend, const HyperRelationMap& relations) {
    if (!relations.is_legal(keyword.type, label)) {
        throw Error(ErrorCode::IllegalLabelPair, "(" + keyword.type + ", " + label + ") is not a legal hyper-relation");
    }
    ChatRequest req{TemplateId::EvidenceExtraction,
                    {{"keyword", keyword.text}, {"label", label}, {"content", unit.content}}};
    const json reply = chat_json(backend, req, [](const json& j) {
        for (const auto& e : j.at("evidence")) {
            if (!e.is_string()) throw Error(ErrorCode::BadResponse, "evidence entries must be strings");
        }
    });
    std::vector<Evidence> out;
    for (const auto& e : reply["evidence"]) {
        std::string desc = text::trim(e.get<std::string>());
        if (desc.empty()) continue;
        Evidence ev;
        ev.description = std::move(desc);
        ev.label = label;
        ev.anchor_keyword = keyword.text;
        ev.anchor_type = keyword.type;
        ev.provenance = {unit.document_id, unit.chunk_index};
        out.push_back(std::move(ev));
    }
    return out;
}

std::vector<EntityMention> extract_entity_mentions(const Evidence& ev, const std::set<std::string>& entity_types,
                                                   const NormalizationTable& table, ChatBackend& backend) {
    std::string types;
    for (const auto& t : entity_types) types += (types.empty() ? "" : ", ") + t;
    ChatRequest req{TemplateId::EntityExtraction, {{"entity_types", types}, {"evidence", ev.description}}};
    const json reply = chat_json(backend, req, [](const json& j) {
        for (const auto& m : j.at("entities")) {
            if (!m.at("name").is_string() || !m.at("type").is_string()) {
                throw Error(ErrorCode::BadResponse, "entity entries need string name and type");
            }
        }
    });
    std::vector<EntityMention> out;
    std::set<std::string> seen;
    for (const auto& m : reply["entities"]) {
        const std::string type = text::fold(m["type"].get<std::string>());
        if (!entity_types.contains(type)) continue;
        for (auto& name : table.normalize(m["name"].get<std::string>())) {
            if (seen.insert(name).second) out.push_back({std::move(name), type});
        }
    }
    return out;
}

std::vector<std::string> extract_entities(Hypergraph& graph, EvidenceId ev, const NormalizationTable& table,
                                          ChatBackend& backend) {
    std::vector<std::string> names;
    for (auto& m : extract_entity_mentions(graph.evidence(ev), graph.entity_types(), table, backend)) {
        graph.link_entity(ev, m.name, m.type);
        names.push_back(std::move(m.name));
    }
    return names;
}

// --- topics --------------------------------------------------------------------

namespace {

std::string summarize(ChatBackend& backend, TemplateId tpl, const std::string& entity, const std::string& label,
                      const char* slot, const std::string& body) {
    ChatRequest req{tpl, {{"entity", entity}, {"label", label}, {slot, body}}};
    std::string out = text::trim(backend.chat(req).text);
    if (out.empty()) throw Error(ErrorCode::BadResponse, "empty topic summary");
    return out;
}

} // namespace

std::vector<Topic> generate_topics(const Hypergraph& graph, EntityId entity, ChatBackend& backend,
                                   const IngestionConfig& cfg) {
    cfg.validate();
    const Entity& m = graph.entity(entity);
    std::map<std::string, std::vector<EvidenceId>> by_label;
    for (EvidenceId e : m.evidence_ids) by_label[graph.evidence(e).label].push_back(e);

    std::vector<Topic> out;
    for (const auto& [label, ids] : by_label) {
        std::vector<std::string> locals;
        for (std::size_t start = 0; start < ids.size(); start += cfg.summary_batch) {
            std::string lines;
            const std::size_t end = std::min(ids.size(), start + cfg.summary_batch);
            for (std::size_t i = start; i < end; ++i) lines += "- " + graph.evidence(ids[i]).description + "\n";
            locals.push_back(summarize(backend, TemplateId::TopicSummary, m.name, label, "evidence", lines));
        }
        Topic t;
        t.label = label;
        t.anchor_entity = entity;
        t.evidence_ids = {ids.begin(), ids.end()};
        if (locals.size() == 1) {
            t.description = std::move(locals.front());
        } else {
            std::string joined;
            for (const auto& s : locals) joined += s + "\n";
            t.description = summarize(backend, TemplateId::TopicMerge, m.name, label, "summaries", joined);
        }
        out.push_back(std::move(t));
    }
    return out;
}

// --- build ---------------------------------------------------------------------

json BuildReport::to_json() const {
    json skipped_json = json::array();
    for (const auto& s : skipped) skipped_json.push_back({{"id", s.id}, {"reason", s.reason}});
    json stages = json::object();
    for (const auto& [name, u] : stage_usage) stages[name] = hyperrag::to_json(u);
    json violations_json = json::array();
    for (const auto& v : violations) {
        violations_json.push_back({{"kind", std::string(to_string(v.kind))}, {"record", v.record}, {"message", v.message}});
    }
    return {{"counts", {{"entities", entities}, {"topics", topics}, {"evidence", evidence}, {"edges", edges}}},
            {"documents", {{"total", documents_total}, {"processed", documents_processed}, {"skipped", skipped_json}}},
            {"chunks", chunks},
            {"duplicate_evidence", duplicate_evidence},
            {"entity_failures", entity_failures},
            {"topic_failures", topic_failures},
            {"usage", hyperrag::to_json(usage)},
            {"stage_usage", stages},
            {"warnings", warnings},
            {"violations", violations_json}};
}

namespace {

struct DocumentOutcome {
    std::vector<Evidence> evidence;
    std::vector<std::string> warnings;
    std::size_t chunks = 0;
    std::optional<std::string> skip_reason;
};

DocumentOutcome process_document(const Document& doc, const IngestionConfig& cfg, ChatBackend& keywords_backend,
                                 ChatBackend& evidence_backend, const HyperRelationMap& relations) {
    DocumentOutcome out;
    try {
        auto units = split_document(doc, cfg);
        const auto keywords = extract_document_keywords(doc, keywords_backend, relations, &out.warnings);
        for (auto& u : units) u.keywords = keywords;
        out.chunks = units.size();
        for (const auto& u : units) {
            for (const auto& kw : u.keywords) {
                for (const auto& label : relations.labels_for(kw.type)) {
                    auto found = extract_evidence(u, kw, label, evidence_backend, relations);
                    std::move(found.begin(), found.end(), std::back_inserter(out.evidence));
                }
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig) throw;
        out.evidence.clear();
        out.skip_reason = e.what();
    }
    return out;
}

} // namespace

BuildResult build_graph(std::vector<Document> corpus, const IngestionConfig& cfg, ChatBackend& backend,
                        const HyperRelationMap& relations) {
    cfg.validate();
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus is empty");
    const NormalizationTable table =
        cfg.normalization_path.empty() ? NormalizationTable{} : NormalizationTable::load(cfg.normalization_path);
    std::sort(corpus.begin(), corpus.end(), [](const Document& a, const Document& b) { return a.id < b.id; });

    MeteredChat keyword_meter(backend), evidence_meter(backend), entity_meter(backend), topic_meter(backend);
    BuildResult result{Hypergraph(relations), {}};
    Hypergraph& graph = result.graph;
    BuildReport& report = result.report;
    report.documents_total = corpus.size();

    // 1. documents -> evidence
    std::vector<DocumentOutcome> outcomes(corpus.size());
    parallel_for(corpus.size(), cfg.max_in_flight, [&](std::size_t i) {
        outcomes[i] = process_document(corpus[i], cfg, keyword_meter, evidence_meter, relations);
    });

    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& o = outcomes[i];
        std::move(o.warnings.begin(), o.warnings.end(), std::back_inserter(report.warnings));
        if (o.skip_reason) {
            spdlog::warn("skipping document {}: {}", corpus[i].id, *o.skip_reason);
            report.skipped.push_back({corpus[i].id, *o.skip_reason});
            continue;
        }
        ++report.documents_processed;
        report.chunks += o.chunks;
        for (auto& ev : o.evidence) {
            // Overlapping windows re-extract the same statement.
            if (!seen.emplace(text::fold(ev.anchor_keyword), ev.label, text::fold(ev.description)).second) {
                ++report.duplicate_evidence;
                continue;
            }
            graph.add_evidence(std::move(ev));
        }
    }

    // 2. evidence -> entities
    std::vector<EvidenceId> evidence_ids;
    for (const auto& [id, ev] : graph.evidence()) evidence_ids.push_back(id);
    std::vector<std::optional<std::vector<EntityMention>>> mentions(evidence_ids.size());
    parallel_for(evidence_ids.size(), cfg.max_in_flight, [&](std::size_t i) {
        try {
            mentions[i] = extract_entity_mentions(graph.evidence(evidence_ids[i]), graph.entity_types(), table,
                                                  entity_meter);
        } catch (const Error& e) {
            spdlog::warn("entity extraction failed for {}: {}", to_string(evidence_ids[i]), e.what());
        }
    });
    for (std::size_t i = 0; i < evidence_ids.size(); ++i) {
        if (!mentions[i]) {
            ++report.entity_failures;
            continue;
        }
        for (const auto& m : *mentions[i]) graph.link_entity(evidence_ids[i], m.name, m.type);
    }

    // 3. entities -> topics
    std::vector<EntityId> entity_ids;
    for (const auto& [id, m] : graph.entities()) entity_ids.push_back(id);
    std::vector<std::optional<std::vector<Topic>>> topics(entity_ids.size());
    parallel_for(entity_ids.size(), cfg.max_in_flight, [&](std::size_t i) {
        try {
            topics[i] = generate_topics(graph, entity_ids[i], topic_meter, cfg);
        } catch (const Error& e) {
            spdlog::warn("topic generation failed for {}: {}", graph.entity(entity_ids[i]).name, e.what());
        }
    });
    for (auto& group : topics) {
        if (!group) {
            ++report.topic_failures;
            continue;
        }
        for (auto& t : *group) graph.add_topic(std::move(t));
    }

    // 4. link, audit, freeze
    report.edges = graph.link_all_topics();
    report.violations = graph.audit();
    graph.freeze();

    report.entities = graph.entities().size();
    report.topics = graph.topics().size();
    report.evidence = graph.evidence().size();
    report.stage_usage = {{"keywords", keyword_meter.usage()},
                          {"evidence", evidence_meter.usage()},
                          {"entities", entity_meter.usage()},
                          {"topics", topic_meter.usage()}};
    for (const auto& [name, u] : report.stage_usage) report.usage += u;
    spdlog::info("built graph: {} entities, {} topics, {} evidence, {} edges ({} of {} documents)", report.entities,
                 report.topics, report.evidence, report.edges, report.documents_processed, report.documents_total);
    return result;
}

} // namespace hyperrag
