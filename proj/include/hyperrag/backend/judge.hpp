#pragma once

#include "hyperrag/backend/chat.hpp"

#include <string>
#include <vector>

namespace hyperrag {

enum class Rubric { KeypointCoverage, RecallCompare, PrecisionCompare, Usefulness };

struct KeypointVerdict {
    bool covered = false;
    bool contradicted = false;
    friend bool operator==(const KeypointVerdict&, const KeypointVerdict&) = default;
};

enum class Preference { A, B, Tie };

enum class CompareAxis { Recall, Precision };

std::string_view to_string(Preference p);
std::string_view to_string(CompareAxis a);

class Judge {
public:
    virtual ~Judge() = default;

    /// One verdict per keypoint, in keypoint order.
    virtual std::vector<KeypointVerdict> keypoints(const std::string& question,
                                                   const std::vector<std::string>& keypoints,
                                                   const std::string& candidate) = 0;

    /// Which retrieval result better serves `reference` on one axis.
    virtual Preference compare(const std::string& question, const std::string& reference, const std::string& a,
                               const std::string& b, CompareAxis axis) = 0;

    /// 0-10 usefulness of `candidate` for answering `question`.
    virtual int usefulness(const std::string& question, const std::string& reference,
                           const std::string& candidate) = 0;

    virtual std::string model_name() const = 0;
};

/// Judge backed by a chat model with strict JSON verdicts (one reprompt).
class LlmJudge final : public Judge {
public:
    explicit LlmJudge(ChatBackend& chat) : chat_(chat) {}

    std::vector<KeypointVerdict> keypoints(const std::string& question, const std::vector<std::string>& keypoints,
                                           const std::string& candidate) override;
    Preference compare(const std::string& question, const std::string& reference, const std::string& a,
                       const std::string& b, CompareAxis axis) override;
    int usefulness(const std::string& question, const std::string& reference, const std::string& candidate) override;
    std::string model_name() const override { return chat_.model_name(); }

private:
    ChatBackend& chat_;
};

/// Offline judge: substring coverage with negation detection.
///
/// A keypoint is covered when its folded text occurs in the candidate, and
/// contradicted when an occurrence is directly preceded by "not", "no" or
/// "never". Comparisons count covered reference keypoints (recall) or the
/// share of candidate lines that mention any keypoint (precision). The
/// reference is split into keypoints on newlines and semicolons.
class MockJudge final : public Judge {
public:
    std::vector<KeypointVerdict> keypoints(const std::string& question, const std::vector<std::string>& keypoints,
                                           const std::string& candidate) override;
    Preference compare(const std::string& question, const std::string& reference, const std::string& a,
                       const std::string& b, CompareAxis axis) override;
    int usefulness(const std::string& question, const std::string& reference, const std::string& candidate) override;
    std::string model_name() const override { return "mock-judge"; }

    static std::vector<std::string> split_reference(const std::string& reference);
};

} // namespace hyperrag
