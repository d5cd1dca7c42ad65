#include "hyperrag/backend/embedding.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/text.hpp"

#include <cmath>
#include <fstream>
#include <mutex>

namespace hyperrag {

EmbeddingVector EmbeddingVector::normalized(std::vector<double> components) {
    double sq = 0.0;
    for (double c : components) sq += c * c;
    if (!(sq > 0.0) || !std::isfinite(sq)) throw Error(ErrorCode::BadResponse, "embedding has zero or non-finite norm");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& c : components) c *= inv;
    EmbeddingVector v;
    v.v_ = std::move(components);
    return v;
}

EmbeddingVector EmbeddingVector::unit(std::vector<double> components) {
    EmbeddingVector v;
    v.v_ = std::move(components);
    if (!(std::abs(v.norm() - 1.0) <= 1e-9)) throw Error(ErrorCode::BadResponse, "embedding is not unit length");
    return v;
}

double EmbeddingVector::norm() const noexcept {
    double sq = 0.0;
    for (double c : v_) sq += c * c;
    return std::sqrt(sq);
}

double EmbeddingVector::cosine(const EmbeddingVector& other) const {
    if (other.v_.size() != v_.size()) throw Error(ErrorCode::LengthMismatch, "embedding dimensions differ");
    double dot = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) dot += v_[i] * other.v_[i];
    return dot;
}

EmbeddingVector EmbeddingBackend::embed(std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::EmptyInput, "cannot embed empty text");
    const std::string key(text);
    {
        std::shared_lock lock(mu_);
        if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    BackendUsage usage;
    EmbeddingVector v = do_embed(text, usage);
    usage_.add(usage);
    std::unique_lock lock(mu_);
    return cache_.emplace(key, std::move(v)).first->second;
}

HashingEmbedder::HashingEmbedder(std::size_t dimensions, std::uint64_t seed,
                                 std::unordered_map<std::string, std::string> synonyms)
    : dims_(dimensions), seed_(seed), synonyms_(std::move(synonyms)) {
    if (dims_ == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

std::unordered_map<std::string, std::string> HashingEmbedder::load_synonyms(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read synonym table " + path);
    std::unordered_map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (line.empty() || line[0] == '#' || tab == std::string::npos) continue;
        out[text::fold(line.substr(0, tab))] = text::fold(line.substr(tab + 1));
    }
    return out;
}

EmbeddingVector HashingEmbedder::do_embed(std::string_view input, BackendUsage& usage) {
    std::vector<std::string> ws;
    for (auto& w : text::words(input)) {
        const auto it = synonyms_.find(w);
        if (it == synonyms_.end()) {
            ws.push_back(std::move(w));
            continue;
        }
        // A canonical form may span several words.
        for (auto& part : text::words(it->second)) ws.push_back(std::move(part));
    }

    std::vector<double> v(dims_, 0.0);
    auto add = [&](std::string_view feature, double weight) {
        const std::uint64_t h = text::fnv1a(feature, seed_);
        const double sign = (text::fnv1a(feature, ~seed_) >> 63) ? -1.0 : 1.0;
        v[h % dims_] += sign * weight;
    };
    for (std::size_t i = 0; i < ws.size(); ++i) {
        add(ws[i], 1.0);
        if (i + 1 < ws.size()) add(ws[i] + ' ' + ws[i + 1], 0.5);
    }
    double sq = 0.0;
    for (double c : v) sq += c * c;
    if (ws.empty() || sq == 0.0) add(input, 1.0);

    usage.calls = 1;
    usage.attempts = 1;
    usage.prompt_tokens = ws.size();
    return EmbeddingVector::normalized(std::move(v));
}

} // namespace hyperrag
