#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperrag {

enum class ErrorCode {
    // graph
    IllegalLabelPair,
    DuplicateId,
    UnknownId,
    EmptyTopic,
    LabelMismatch,
    ForeignEvidence,
    GraphFrozen,
    AuditFailed,
    // persistence
    CorruptFile,
    VersionMismatch,
    // ingestion
    InvalidConfig,
    EmptyDocument,
    EmptyCorpus,
    NoKeywords,
    // backend
    UnboundSlot,
    UnknownTemplate,
    Timeout,
    RateLimited,
    Unavailable,
    BadResponse,
    UnparseableVerdict,
    EmptyInput,
    // retrieval
    IsolatedSeeds,
    NoFeatures,
    // evaluation
    EmptyDataset,
    DegenerateTally,
    LengthMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Transport-level failures that a client may retry.
    bool retryable() const noexcept {
        return code_ == ErrorCode::Timeout || code_ == ErrorCode::RateLimited ||
               code_ == ErrorCode::Unavailable;
    }

private:
    ErrorCode code_;
};

} // namespace hyperrag
