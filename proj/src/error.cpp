#include "hyperrag/error.hpp"

namespace hyperrag {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::IllegalLabelPair: return "IllegalLabelPair";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::EmptyTopic: return "EmptyTopic";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::ForeignEvidence: return "ForeignEvidence";
    case ErrorCode::GraphFrozen: return "GraphFrozen";
    case ErrorCode::AuditFailed: return "AuditFailed";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NoKeywords: return "NoKeywords";
    case ErrorCode::UnboundSlot: return "UnboundSlot";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Unavailable: return "Unavailable";
    case ErrorCode::BadResponse: return "BadResponse";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IsolatedSeeds: return "IsolatedSeeds";
    case ErrorCode::NoFeatures: return "NoFeatures";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateTally: return "DegenerateTally";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    }
    return "Unknown";
}

} // namespace hyperrag
