#pragma once

#include "hyperrag/hypergraph.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace hyperrag {

inline constexpr int kGraphFormatVersion = 1;

/// One parsed line of a newline-delimited JSON file.
struct NdjsonRecord {
    std::size_t line = 0;
    nlohmann::json value;
};

/// Reads a meta-first NDJSON envelope. Throws CorruptFile (with line number) on
/// parse errors or a missing manifest, VersionMismatch on a foreign version or
/// record kind. `meta` receives the manifest record.
std::vector<NdjsonRecord> read_ndjson(std::istream& in, int version, const std::set<std::string>& kinds,
                                      nlohmann::json& meta);

/// Canonical serialization: manifest, then evidence, entity, topic, edge records
/// in ascending id order. Throws AuditFailed when the graph is not clean.
void write_graph(const Hypergraph& graph, std::ostream& out);
void save_graph(const Hypergraph& graph, const std::filesystem::path& path);

/// Reconstructs records as stored; semantic problems are left for audit().
Hypergraph read_graph(std::istream& in, const HyperRelationMap& relations = HyperRelationMap::standard());
Hypergraph load_graph(const std::filesystem::path& path,
                      const HyperRelationMap& relations = HyperRelationMap::standard());

} // namespace hyperrag
