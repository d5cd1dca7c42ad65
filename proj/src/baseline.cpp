#include "hyperrag/baseline.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/persistence.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace hyperrag {

using nlohmann::json;
using nlohmann::ordered_json;

ChunkIndex index_corpus(const std::vector<Document>& corpus, const IngestionConfig& cfg, EmbeddingBackend& embedder) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus is empty");
    std::vector<const Document*> docs;
    for (const auto& d : corpus) docs.push_back(&d);
    std::sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) { return a->id < b->id; });

    ChunkIndex index;
    index.dimensions = embedder.dimensions();
    index.model = embedder.model_name();
    for (const Document* d : docs) {
        for (auto& unit : split_document(*d, cfg)) {
            EmbeddingVector v = embedder.embed(unit.content);
            if (index.dimensions == 0) index.dimensions = v.dimensions();
            if (v.dimensions() != index.dimensions) {
                throw Error(ErrorCode::BadResponse, "embedding dimension changed while indexing");
            }
            index.records.push_back({unit.document_id, unit.chunk_index, std::move(unit.content), std::move(v)});
        }
    }
    return index;
}

std::string ChunkResult::context(const ChunkIndex& index) const {
    std::string out;
    for (const auto& c : chunks) out += index.records[c.record].text + "\n";
    return out;
}

ChunkResult query_topk(const std::string& query, const ChunkIndex& index, EmbeddingBackend& embedder, std::size_t k,
                       std::size_t budget) {
    ChunkResult result;
    if (index.records.empty() || k == 0) return result;
    const EmbeddingVector q = embedder.embed(query);

    std::vector<RankedChunk> all;
    all.reserve(index.records.size());
    for (std::size_t i = 0; i < index.records.size(); ++i) {
        all.push_back({i, q.cosine(index.records[i].embedding), 0});
    }
    auto before = [&](const RankedChunk& a, const RankedChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        const auto& ra = index.records[a.record];
        const auto& rb = index.records[b.record];
        return std::tie(ra.document_id, ra.chunk_index) < std::tie(rb.document_id, rb.chunk_index);
    };
    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), before);
    all.resize(n);

    for (auto& c : all) {
        c.words = text::word_count(index.records[c.record].text);
        if (result.total_words + c.words > budget) break;
        result.total_words += c.words;
        result.chunks.push_back(c);
    }
    result.dropped_by_budget = all.size() - result.chunks.size();
    return result;
}

void write_index(const ChunkIndex& index, std::ostream& out) {
    ordered_json meta;
    meta["kind"] = "meta";
    meta["version"] = kChunkFormatVersion;
    meta["model"] = index.model;
    meta["dimensions"] = index.dimensions;
    meta["counts"] = {{"chunks", index.records.size()}};
    out << meta.dump() << '\n';
    for (const auto& r : index.records) {
        ordered_json j;
        j["kind"] = "chunk";
        j["document_id"] = r.document_id;
        j["chunk_index"] = r.chunk_index;
        j["text"] = r.text;
        j["embedding"] = std::vector<double>(r.embedding.components().begin(), r.embedding.components().end());
        out << j.dump() << '\n';
    }
}

void save_index(const ChunkIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
    write_index(index, out);
}

ChunkIndex read_index(std::istream& in) {
    json meta;
    const auto records = read_ndjson(in, kChunkFormatVersion, {"chunk"}, meta);
    ChunkIndex index;
    try {
        index.model = meta.at("model").get<std::string>();
        index.dimensions = meta.at("dimensions").get<std::size_t>();
        if (meta.at("counts").at("chunks").get<std::size_t>() != records.size()) {
            throw Error(ErrorCode::CorruptFile, "line 1: chunk count does not match the manifest");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, std::string("line 1: ") + e.what());
    }
    for (const auto& r : records) {
        const std::string where = "line " + std::to_string(r.line) + ": ";
        try {
            ChunkRecord c;
            c.document_id = r.value.at("document_id").get<std::string>();
            c.chunk_index = r.value.at("chunk_index").get<std::uint32_t>();
            c.text = r.value.at("text").get<std::string>();
            c.embedding = EmbeddingVector::unit(r.value.at("embedding").get<std::vector<double>>());
            if (c.embedding.dimensions() != index.dimensions) {
                throw Error(ErrorCode::CorruptFile, where + "embedding dimension mismatch");
            }
            index.records.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::CorruptFile, where + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::CorruptFile) throw;
            throw Error(ErrorCode::CorruptFile, where + e.what());
        }
    }
    return index;
}

ChunkIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + path.string());
    return read_index(in);
}

} // namespace hyperrag
