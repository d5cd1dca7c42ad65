#pragma once

#include "hyperrag/backend/chat.hpp"
#include "hyperrag/backend/judge.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hyperrag {

struct Sample {
    std::string id;
    std::string question;
    std::optional<std::string> gold_answer;
    std::vector<std::string> keypoints;
    std::vector<std::pair<std::string, std::string>> options; // (key, text), e.g. ("A", "...")
};

/// One JSON object per line: {id, question, gold_answer?, keypoints?, options?}.
/// `options` may be an object keyed by letter or a list (keyed A, B, ...).
/// Throws CorruptFile with the line number on malformed rows, EmptyDataset
/// when no rows remain.
std::vector<Sample> read_dataset(std::istream& in);
std::vector<Sample> load_dataset(const std::filesystem::path& path);

/// "A. text" lines for the answer prompt.
std::string format_options(const Sample& s);

// --- key points ---------------------------------------------------------------

/// Micro-average: covered-and-not-contradicted keypoints over all keypoints.
/// Throws EmptyDataset when there are no keypoints at all.
double keypoint_score(const std::vector<std::vector<KeypointVerdict>>& verdicts);

/// Memoizes keypoint verdicts by (question, candidate hash); everything else
/// passes through.
class CachingJudge final : public Judge {
public:
    explicit CachingJudge(Judge& inner) : inner_(inner) {}

    std::vector<KeypointVerdict> keypoints(const std::string& question, const std::vector<std::string>& keypoints,
                                           const std::string& candidate) override;
    Preference compare(const std::string& question, const std::string& reference, const std::string& a,
                       const std::string& b, CompareAxis axis) override {
        return inner_.compare(question, reference, a, b, axis);
    }
    int usefulness(const std::string& question, const std::string& reference, const std::string& candidate) override {
        return inner_.usefulness(question, reference, candidate);
    }
    std::string model_name() const override { return inner_.model_name(); }

    std::size_t hits() const;
    std::size_t misses() const;

private:
    Judge& inner_;
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::uint64_t>, std::vector<KeypointVerdict>> cache_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// --- advantage -------------------------------------------------------------------

/// Proportions in [0, 1] on one comparison axis.
struct AxisShare {
    double win = 0.0;
    double tie = 0.0;
    double loss = 0.0;
};

struct AxisCounts {
    std::size_t win = 0;
    std::size_t tie = 0;
    std::size_t loss = 0;

    std::size_t total() const noexcept { return win + tie + loss; }
    AxisShare share() const;
    void add(Preference p_for_a);
};

struct Tally {
    AxisCounts recall;
    AxisCounts precision;
};

struct Advantage {
    double r = 0.0;
    double p = 0.0;
    double a = 0.0; // in [-1, 1]; tables print 100 * a
};

/// r = win/(1 - tie) per axis, a = 4rp/(r + p) - 1. Throws DegenerateTally when
/// a tie share is 1 or r + p = 0.
Advantage advantage_score(const AxisShare& recall, const AxisShare& precision);
Advantage advantage_score(const Tally& t);

// --- runs --------------------------------------------------------------------------

/// Produces the text a retriever contributes for one sample.
using ContextFn = std::function<std::string(const Sample&)>;

struct Exclusion {
    std::string id;
    std::string reason;
};

struct CompareOptions {
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 4;
};

struct CompareReport {
    Tally tally;
    std::optional<Advantage> advantage; // absent when the tally is degenerate
    std::vector<Exclusion> excluded;
    nlohmann::json rows = nlohmann::json::array();
    std::uint64_t seed = 0;
    std::string judge_model;

    nlohmann::json to_json() const;
};

/// Per sample, one judge call per axis with a seeded coin deciding whether A
/// is shown first. Reference text is the keypoints, else the gold answer.
CompareReport compare_retrievers(const std::vector<Sample>& dataset, const ContextFn& a, const ContextFn& b,
                                 Judge& judge, const CompareOptions& opts = {});

struct KeypointReport {
    double score = 0.0;
    std::size_t satisfied = 0;
    std::size_t total = 0;
    std::vector<Exclusion> excluded;
    nlohmann::json rows = nlohmann::json::array();
    std::string judge_model;

    nlohmann::json to_json() const;
};

/// Judges `answer(sample)` against each sample's keypoints. Samples without
/// keypoints or whose answer/judge call fails are excluded.
KeypointReport evaluate_keypoints(const std::vector<Sample>& dataset, const ContextFn& answer, Judge& judge,
                                  std::size_t max_in_flight = 4);

struct ClassificationMetrics {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    nlohmann::json to_json() const;
};

/// Exact match after case folding. F1 treats `positive` as the positive class;
/// a zero denominator yields 0. Throws LengthMismatch or EmptyDataset.
ClassificationMetrics accuracy_and_f1(const std::vector<std::string>& predictions,
                                      const std::vector<std::string>& gold, const std::string& positive = "yes");

/// Maps a free-text answer to an option key when it names one ("B", "B.",
/// "(B) ...") or quotes an option's text; otherwise returns the folded answer.
std::string parse_choice(const std::string& answer, const Sample& s);

} // namespace hyperrag
