#include "support.hpp"

#include "hyperrag/app.hpp"
#include "hyperrag/baseline.hpp"
#include "hyperrag/error.hpp"
#include "hyperrag/text.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace hyperrag;
using namespace hyperrag::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::BadResponse;
}

std::vector<Document> small_corpus() {
    std::vector<Document> docs;
    auto words = [](const std::string& stem, int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += stem + std::to_string(i % 37) + " ";
        return s;
    };
    docs.push_back({"b", "B", "", words("beta", 60), "en"});
    docs.push_back({"a", "A", "", words("alpha", 30), "en"});
    docs.push_back({"c", "C", "", "metformin is stopped when egfr falls below thirty", "en"});
    return docs;
}

IngestionConfig small_windows() {
    IngestionConfig cfg;
    cfg.window = 16;
    cfg.overlap = 4;
    return cfg;
}

} // namespace

TEST(ChunkIndexTest, OneRecordPerUnitInDocumentOrder) {
    HashingEmbedder emb(64);
    const auto corpus = small_corpus();
    const auto cfg = small_windows();
    const auto index = index_corpus(corpus, cfg, emb);
    std::size_t units = 0;
    for (const auto& d : corpus) units += split_document(d, cfg).size();
    ASSERT_EQ(index.records.size(), units);
    EXPECT_EQ(index.dimensions, 64u);
    EXPECT_EQ(index.model, "hashing-64");
    EXPECT_TRUE(std::is_sorted(index.records.begin(), index.records.end(), [](const auto& x, const auto& y) {
        return std::tie(x.document_id, x.chunk_index) < std::tie(y.document_id, y.chunk_index);
    }));
    EXPECT_EQ(index.records.front().document_id, "a");
    EXPECT_EQ(index_corpus(corpus, cfg, emb), index);
}

TEST(ChunkIndexTest, EmptyCorpusIsAnError) {
    HashingEmbedder emb(64);
    EXPECT_EQ(code_of([&] { index_corpus({}, {}, emb); }), ErrorCode::EmptyCorpus);
}

TEST(ChunkQuery, ExactChunkRanksFirst) {
    HashingEmbedder emb(64);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    const auto r = query_topk("metformin is stopped when egfr falls below thirty", index, emb, 3);
    ASSERT_FALSE(r.chunks.empty());
    EXPECT_EQ(index.records[r.chunks[0].record].document_id, "c");
    EXPECT_NEAR(r.chunks[0].score, 1.0, 1e-12);
}

TEST(ChunkQuery, LargeKReturnsEverything) {
    HashingEmbedder emb(64);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    const auto r = query_topk("alpha3", index, emb, 1000, 1000000);
    EXPECT_EQ(r.chunks.size(), index.records.size());
    EXPECT_EQ(r.dropped_by_budget, 0u);
    EXPECT_TRUE(query_topk("alpha3", index, emb, 0).chunks.empty());
}

TEST(ChunkQuery, MatchesBruteForceScanForEveryK) {
    HashingEmbedder emb(64);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    for (const std::string q : {"alpha1 alpha2", "beta7", "egfr", "nothing in common"}) {
        const auto qv = emb.embed(q);
        std::vector<std::tuple<double, std::string, std::uint32_t, std::size_t>> oracle;
        for (std::size_t i = 0; i < index.records.size(); ++i) {
            double dot = 0.0;
            for (std::size_t d = 0; d < qv.dimensions(); ++d) {
                dot += qv.components()[d] * index.records[i].embedding.components()[d];
            }
            oracle.emplace_back(-dot, index.records[i].document_id, index.records[i].chunk_index, i);
        }
        std::sort(oracle.begin(), oracle.end());
        for (std::size_t k = 1; k <= index.records.size(); ++k) {
            const auto r = query_topk(q, index, emb, k, 1000000);
            ASSERT_EQ(r.chunks.size(), k);
            for (std::size_t i = 0; i < k; ++i) {
                EXPECT_EQ(r.chunks[i].record, std::get<3>(oracle[i])) << q << " k=" << k;
                EXPECT_NEAR(r.chunks[i].score, -std::get<0>(oracle[i]), 1e-12);
            }
        }
    }
}

TEST(ChunkQuery, BudgetDropsWholeChunksFromTheTail) {
    HashingEmbedder emb(64);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    const auto full = query_topk("beta3", index, emb, 4, 1000000);
    ASSERT_EQ(full.chunks.size(), 4u);
    const std::size_t budget = full.chunks[0].words + full.chunks[1].words + 1;
    const auto cut = query_topk("beta3", index, emb, 4, budget);
    ASSERT_EQ(cut.chunks.size(), 2u);
    EXPECT_EQ(cut.dropped_by_budget, 2u);
    EXPECT_EQ(cut.total_words, budget - 1);
    EXPECT_EQ(cut.context(index),
              index.records[cut.chunks[0].record].text + "\n" + index.records[cut.chunks[1].record].text + "\n");
}

TEST(ChunkPersistence, RoundTripIsExact) {
    HashingEmbedder emb(32);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    std::stringstream buf;
    write_index(index, buf);
    const std::string first = buf.str();
    const auto back = read_index(buf);
    EXPECT_EQ(back, index);
    std::stringstream again;
    write_index(back, again);
    EXPECT_EQ(again.str(), first);
}

TEST(ChunkPersistence, DamageIsReported) {
    HashingEmbedder emb(32);
    const auto index = index_corpus(small_corpus(), small_windows(), emb);
    std::stringstream buf;
    write_index(index, buf);
    const std::string text = buf.str();

    std::istringstream truncated(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
    EXPECT_EQ(code_of([&] { read_index(truncated); }), ErrorCode::CorruptFile);

    std::string v2 = text;
    const auto pos = v2.find("\"version\":1");
    ASSERT_NE(pos, std::string::npos);
    v2.replace(pos, 11, "\"version\":2");
    std::istringstream newer(v2);
    EXPECT_EQ(code_of([&] { read_index(newer); }), ErrorCode::VersionMismatch);

    std::istringstream garbage("not json\n");
    EXPECT_EQ(code_of([&] { read_index(garbage); }), ErrorCode::CorruptFile);

    EXPECT_EQ(code_of([] { load_index("/nonexistent/index.ndjson"); }), ErrorCode::InvalidConfig);
}

TEST(ChunkIndexTest, FixtureCorpusIndexesEveryChunk) {
    const auto corpus = load_corpus(fixture_dir() / "corpus");
    HashingEmbedder emb(256);
    IngestionConfig cfg;
    const auto index = index_corpus(corpus, cfg, emb);
    std::size_t units = 0;
    for (const auto& d : corpus) units += split_document(d, cfg).size();
    EXPECT_EQ(index.records.size(), units);
}
