#pragma once

#include "hyperrag/backend/chat.hpp"

#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hyperrag {

/// Unit-length embedding. Construction normalizes.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    static EmbeddingVector normalized(std::vector<double> components);
    /// Stores already-unit components as given (e.g. read back from disk).
    /// Throws BadResponse if the norm is off by more than 1e-9.
    static EmbeddingVector unit(std::vector<double> components);

    std::span<const double> components() const noexcept { return v_; }
    std::size_t dimensions() const noexcept { return v_.size(); }
    double norm() const noexcept;

    /// Cosine similarity; both operands are unit vectors so this is a dot product.
    double cosine(const EmbeddingVector& other) const;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> v_;
};

/// Text-embedding backend with a per-instance cache: identical text returns
/// an identical vector.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    EmbeddingVector embed(std::string_view text);

    virtual std::size_t dimensions() const = 0;
    virtual std::string model_name() const = 0;
    BackendUsage usage() const noexcept { return usage_.snapshot(); }

protected:
    virtual EmbeddingVector do_embed(std::string_view text, BackendUsage& usage) = 0;

private:
    UsageCounter usage_;
    std::shared_mutex mu_;
    std::unordered_map<std::string, EmbeddingVector> cache_;
};

/// Seeded feature hashing of word unigrams and bigrams. Optional synonym
/// table canonicalizes words before hashing so synonyms share buckets.
class HashingEmbedder final : public EmbeddingBackend {
public:
    explicit HashingEmbedder(std::size_t dimensions = 256, std::uint64_t seed = 0x5eed,
                             std::unordered_map<std::string, std::string> synonyms = {});

    std::size_t dimensions() const override { return dims_; }
    std::string model_name() const override { return "hashing-" + std::to_string(dims_); }

    /// Reads `word<TAB>canonical` lines.
    static std::unordered_map<std::string, std::string> load_synonyms(const std::string& path);

protected:
    EmbeddingVector do_embed(std::string_view text, BackendUsage& usage) override;

private:
    std::size_t dims_;
    std::uint64_t seed_;
    std::unordered_map<std::string, std::string> synonyms_;
};

} // namespace hyperrag
