#pragma once

#include "hyperrag/backend/embedding.hpp"
#include "hyperrag/ingestion.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hyperrag {

inline constexpr int kChunkFormatVersion = 1;

struct ChunkRecord {
    std::string document_id;
    std::uint32_t chunk_index = 0;
    std::string text;
    EmbeddingVector embedding;

    friend bool operator==(const ChunkRecord&, const ChunkRecord&) = default;
};

/// Flat chunk store for the vector baseline. Records are kept in
/// (document id, chunk index) order.
struct ChunkIndex {
    std::size_t dimensions = 0;
    std::string model;
    std::vector<ChunkRecord> records;

    friend bool operator==(const ChunkIndex&, const ChunkIndex&) = default;
};

/// One record per TextUnit of split_document, so chunking matches ingestion.
ChunkIndex index_corpus(const std::vector<Document>& corpus, const IngestionConfig& cfg, EmbeddingBackend& embedder);

struct RankedChunk {
    std::size_t record = 0; // position in ChunkIndex::records
    double score = 0.0;
    std::size_t words = 0;
};

struct ChunkResult {
    std::vector<RankedChunk> chunks;
    std::size_t dropped_by_budget = 0;
    std::size_t total_words = 0;

    std::string context(const ChunkIndex& index) const;
};

/// Exact scan: top k by cosine, ties by (document id, chunk index), then whole
/// chunks are dropped from the tail until the word budget holds.
ChunkResult query_topk(const std::string& query, const ChunkIndex& index, EmbeddingBackend& embedder, std::size_t k,
                       std::size_t budget = 8000);

void write_index(const ChunkIndex& index, std::ostream& out);
void save_index(const ChunkIndex& index, const std::filesystem::path& path);
ChunkIndex read_index(std::istream& in);
ChunkIndex load_index(const std::filesystem::path& path);

} // namespace hyperrag
