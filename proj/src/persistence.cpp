#include "hyperrag/persistence.hpp"

#include "hyperrag/error.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hyperrag {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string line_tag(std::size_t line) { return "line " + std::to_string(line); }

template <class T>
T field(const NdjsonRecord& r, const char* key) {
    const auto it = r.value.find(key);
    if (it == r.value.end()) {
        throw Error(ErrorCode::CorruptFile, line_tag(r.line) + ": missing field '" + key + "'");
    }
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, line_tag(r.line) + ": field '" + key + "': " + e.what());
    }
}

} // namespace

std::vector<NdjsonRecord> read_ndjson(std::istream& in, int version, const std::set<std::string>& kinds,
                                      json& meta) {
    std::vector<NdjsonRecord> records;
    std::string line;
    std::size_t number = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        json value;
        try {
            value = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::CorruptFile, line_tag(number) + ": " + e.what());
        }
        if (!value.is_object() || !value.contains("kind") || !value["kind"].is_string()) {
            throw Error(ErrorCode::CorruptFile, line_tag(number) + ": record without a kind");
        }
        const auto kind = value["kind"].get<std::string>();
        if (!have_meta) {
            if (kind != "meta") throw Error(ErrorCode::CorruptFile, line_tag(number) + ": manifest record missing");
            if (!value.contains("version") || value["version"] != version) {
                throw Error(ErrorCode::VersionMismatch,
                            "file version " + value.value("version", json()).dump() + ", expected " +
                                std::to_string(version));
            }
            meta = std::move(value);
            have_meta = true;
            continue;
        }
        if (!kinds.contains(kind)) {
            throw Error(ErrorCode::VersionMismatch, line_tag(number) + ": unknown record kind '" + kind + "'");
        }
        records.push_back({number, std::move(value)});
    }
    if (!have_meta) throw Error(ErrorCode::CorruptFile, "line 1: empty file");
    return records;
}

void write_graph(const Hypergraph& graph, std::ostream& out) {
    if (const auto v = graph.audit(); !v.empty()) {
        throw Error(ErrorCode::AuditFailed,
                    std::to_string(v.size()) + " violation(s), first: " + v.front().record + " " + v.front().message);
    }
    ordered_json meta;
    meta["kind"] = "meta";
    meta["version"] = kGraphFormatVersion;
    meta["counts"] = {{"entities", graph.entities().size()},
                      {"topics", graph.topics().size()},
                      {"evidence", graph.evidence().size()},
                      {"edges", graph.weights().size()}};
    out << meta.dump() << '\n';

    for (const auto& [id, ev] : graph.evidence()) {
        ordered_json r;
        r["kind"] = "evidence";
        r["id"] = id.value;
        r["description"] = ev.description;
        r["label"] = ev.label;
        r["anchor_keyword"] = ev.anchor_keyword;
        r["anchor_type"] = ev.anchor_type;
        r["document"] = ev.provenance.document_id;
        r["chunk"] = ev.provenance.chunk_index;
        out << r.dump() << '\n';
    }
    for (const auto& [id, m] : graph.entities()) {
        ordered_json r;
        r["kind"] = "entity";
        r["id"] = id.value;
        r["name"] = m.name;
        r["type"] = m.type;
        auto& ev = r["evidence"] = ordered_json::array();
        for (EvidenceId e : m.evidence_ids) ev.push_back(e.value);
        out << r.dump() << '\n';
    }
    for (const auto& [id, t] : graph.topics()) {
        ordered_json r;
        r["kind"] = "topic";
        r["id"] = id.value;
        r["description"] = t.description;
        r["label"] = t.label;
        r["anchor"] = t.anchor_entity.value;
        auto& ev = r["evidence"] = ordered_json::array();
        for (EvidenceId e : t.evidence_ids) ev.push_back(e.value);
        out << r.dump() << '\n';
    }
    for (const auto& [key, w] : graph.weights()) {
        ordered_json r;
        r["kind"] = "edge";
        r["topic_id"] = key.topic.value;
        r["entity_id"] = key.entity.value;
        r["num"] = w.num;
        r["den"] = w.den;
        out << r.dump() << '\n';
    }
}

void save_graph(const Hypergraph& graph, const std::filesystem::path& path) {
    std::ostringstream buffer;
    write_graph(graph, buffer);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::CorruptFile, "cannot open " + path.string() + " for writing");
    out << buffer.str();
}

/// Raw reconstruction bypassing the insert-time checks so that audit() can
/// see exactly what the file says.
class GraphLoader {
public:
    static Hypergraph read(std::istream& in, const HyperRelationMap& relations) {
        json meta;
        const auto records = read_ndjson(in, kGraphFormatVersion, {"entity", "evidence", "topic", "edge"}, meta);
        Hypergraph g(relations);

        std::size_t n_entities = 0, n_topics = 0, n_evidence = 0, n_edges = 0;
        for (const auto& r : records) {
            const auto kind = r.value["kind"].get<std::string>();
            if (kind == "evidence") {
                Evidence ev;
                ev.id = EvidenceId{field<std::uint32_t>(r, "id")};
                ev.description = field<std::string>(r, "description");
                ev.label = field<std::string>(r, "label");
                ev.anchor_keyword = field<std::string>(r, "anchor_keyword");
                ev.anchor_type = field<std::string>(r, "anchor_type");
                ev.provenance.document_id = field<std::string>(r, "document");
                ev.provenance.chunk_index = field<std::uint32_t>(r, "chunk");
                if (!g.evidence_.emplace(ev.id, ev).second) duplicate(r);
                g.evidence_entities_[ev.id];
                g.next_evidence_ = std::max(g.next_evidence_, ev.id.value + 1);
                ++n_evidence;
            } else if (kind == "entity") {
                Entity m;
                m.id = EntityId{field<std::uint32_t>(r, "id")};
                m.name = field<std::string>(r, "name");
                m.type = field<std::string>(r, "type");
                for (auto e : field<std::vector<std::uint32_t>>(r, "evidence")) {
                    const EvidenceId ev{e};
                    if (!g.evidence_.contains(ev)) dangling(r, to_string(ev));
                    m.evidence_ids.insert(ev);
                    g.evidence_entities_[ev].insert(m.id);
                }
                g.entity_by_name_.emplace(m.name, m.id);
                g.next_entity_ = std::max(g.next_entity_, m.id.value + 1);
                if (!g.entities_.emplace(m.id, std::move(m)).second) duplicate(r);
                ++n_entities;
            } else if (kind == "topic") {
                Topic t;
                t.id = TopicId{field<std::uint32_t>(r, "id")};
                t.description = field<std::string>(r, "description");
                t.label = field<std::string>(r, "label");
                t.anchor_entity = EntityId{field<std::uint32_t>(r, "anchor")};
                for (auto e : field<std::vector<std::uint32_t>>(r, "evidence")) {
                    const EvidenceId ev{e};
                    if (!g.evidence_.contains(ev)) dangling(r, to_string(ev));
                    t.evidence_ids.insert(ev);
                    g.evidence_topics_[ev].insert(t.id);
                }
                g.next_topic_ = std::max(g.next_topic_, t.id.value + 1);
                if (!g.topics_.emplace(t.id, std::move(t)).second) duplicate(r);
                ++n_topics;
            } else {
                const EdgeKey key{TopicId{field<std::uint32_t>(r, "topic_id")},
                                  EntityId{field<std::uint32_t>(r, "entity_id")}};
                if (!g.topics_.contains(key.topic)) dangling(r, to_string(key.topic));
                if (!g.entities_.contains(key.entity)) dangling(r, to_string(key.entity));
                const Fraction w{field<std::uint32_t>(r, "num"), field<std::uint32_t>(r, "den")};
                if (w.den == 0) throw Error(ErrorCode::CorruptFile, line_tag(r.line) + ": zero denominator");
                if (!g.weights_.emplace(key, w).second) duplicate(r);
                ++n_edges;
            }
        }

        const auto counts = meta.value("counts", json::object());
        auto expect = [&](const char* what, std::size_t got) {
            const auto want = counts.value(what, static_cast<std::size_t>(0));
            if (want != got) {
                throw Error(ErrorCode::CorruptFile, std::string("manifest declares ") + std::to_string(want) + " " +
                                                        what + ", file holds " + std::to_string(got) +
                                                        " (truncated?)");
            }
        };
        expect("entities", n_entities);
        expect("topics", n_topics);
        expect("evidence", n_evidence);
        expect("edges", n_edges);
        return g;
    }

private:
    [[noreturn]] static void duplicate(const NdjsonRecord& r) {
        throw Error(ErrorCode::CorruptFile, line_tag(r.line) + ": duplicate id");
    }
    [[noreturn]] static void dangling(const NdjsonRecord& r, const std::string& what) {
        throw Error(ErrorCode::CorruptFile, line_tag(r.line) + ": reference to unknown " + what);
    }
};

Hypergraph read_graph(std::istream& in, const HyperRelationMap& relations) {
    return GraphLoader::read(in, relations);
}

Hypergraph load_graph(const std::filesystem::path& path, const HyperRelationMap& relations) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::CorruptFile, "cannot open " + path.string());
    return read_graph(in, relations);
}

} // namespace hyperrag
