#include "hyperrag/backend/judge.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/text.hpp"

#include <algorithm>
#include <cmath>

namespace hyperrag {

using nlohmann::json;

std::string_view to_string(Preference p) {
    switch (p) {
    case Preference::A: return "A";
    case Preference::B: return "B";
    case Preference::Tie: return "tie";
    }
    return "tie";
}

std::string_view to_string(CompareAxis a) { return a == CompareAxis::Recall ? "recall" : "precision"; }

// --- LLM-backed --------------------------------------------------------------

std::vector<KeypointVerdict> LlmJudge::keypoints(const std::string& question, const std::vector<std::string>& kps,
                                                 const std::string& candidate) {
    ChatRequest req{TemplateId::JudgeKeypoints,
                    {{"question", question}, {"candidate", candidate}, {"keypoints", json(kps).dump()}}};
    const json reply = chat_json(
        chat_, req,
        [&](const json& j) {
            const auto& v = j.at("verdicts");
            if (!v.is_array() || v.size() != kps.size()) throw Error(ErrorCode::BadResponse, "verdict count mismatch");
            for (const auto& x : v) {
                if (!x.at("covered").is_boolean() || !x.at("contradicted").is_boolean()) {
                    throw Error(ErrorCode::BadResponse, "verdict flags must be booleans");
                }
            }
        },
        ErrorCode::UnparseableVerdict);
    std::vector<KeypointVerdict> out;
    for (const auto& x : reply["verdicts"]) out.push_back({x["covered"].get<bool>(), x["contradicted"].get<bool>()});
    return out;
}

Preference LlmJudge::compare(const std::string& question, const std::string& reference, const std::string& a,
                             const std::string& b, CompareAxis axis) {
    ChatRequest req{TemplateId::JudgeCompare,
                    {{"question", question},
                     {"reference", reference},
                     {"a", a},
                     {"b", b},
                     {"axis", std::string(to_string(axis))}}};
    const json reply = chat_json(
        chat_, req,
        [](const json& j) {
            const auto w = j.at("winner").get<std::string>();
            if (w != "A" && w != "B" && w != "tie") throw Error(ErrorCode::BadResponse, "winner must be A, B or tie");
        },
        ErrorCode::UnparseableVerdict);
    const auto w = reply["winner"].get<std::string>();
    return w == "A" ? Preference::A : w == "B" ? Preference::B : Preference::Tie;
}

int LlmJudge::usefulness(const std::string& question, const std::string& reference, const std::string& candidate) {
    ChatRequest req{TemplateId::JudgeUsefulness,
                    {{"question", question}, {"reference", reference}, {"candidate", candidate}}};
    const json reply = chat_json(
        chat_, req,
        [](const json& j) {
            const auto s = j.at("score");
            if (!s.is_number_integer() || s.get<int>() < 0 || s.get<int>() > 10) {
                throw Error(ErrorCode::BadResponse, "score must be an integer in [0, 10]");
            }
        },
        ErrorCode::UnparseableVerdict);
    return reply["score"].get<int>();
}

// --- offline -----------------------------------------------------------------

namespace {

KeypointVerdict match_keypoint(const std::string& folded_candidate, const std::string& keypoint) {
    const std::string kp = text::fold(keypoint);
    KeypointVerdict v;
    if (kp.empty()) return v;
    std::size_t pos = folded_candidate.find(kp);
    while (pos != std::string::npos) {
        v.covered = true;
        const std::string_view before = std::string_view(folded_candidate).substr(0, pos);
        for (std::string_view neg : {"not ", "no ", "never "}) {
            if (before.ends_with(neg)) {
                const std::size_t start = before.size() - neg.size();
                if (start == 0 || !std::isalnum(static_cast<unsigned char>(before[start - 1]))) v.contradicted = true;
            }
        }
        pos = folded_candidate.find(kp, pos + 1);
    }
    return v;
}

std::size_t recall_count(const std::vector<std::string>& kps, const std::string& candidate) {
    const std::string c = text::fold(candidate);
    std::size_t n = 0;
    for (const auto& kp : kps) {
        const auto v = match_keypoint(c, kp);
        n += (v.covered && !v.contradicted) ? 1 : 0;
    }
    return n;
}

double precision_share(const std::vector<std::string>& kps, const std::string& candidate) {
    std::size_t lines = 0;
    std::size_t relevant = 0;
    std::size_t pos = 0;
    while (pos <= candidate.size()) {
        auto nl = candidate.find('\n', pos);
        if (nl == std::string::npos) nl = candidate.size();
        const std::string line = text::fold(std::string_view(candidate).substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;
        ++lines;
        relevant += std::any_of(kps.begin(), kps.end(), [&](const std::string& kp) {
            return line.find(text::fold(kp)) != std::string::npos;
        }) ? 1 : 0;
    }
    return lines == 0 ? 0.0 : static_cast<double>(relevant) / static_cast<double>(lines);
}

} // namespace

std::vector<std::string> MockJudge::split_reference(const std::string& reference) {
    std::vector<std::string> out;
    std::string current;
    for (char c : reference + "\n") {
        if (c == '\n' || c == ';') {
            if (auto t = text::trim(current); !t.empty()) out.push_back(std::move(t));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    return out;
}

std::vector<KeypointVerdict> MockJudge::keypoints(const std::string&, const std::vector<std::string>& kps,
                                                  const std::string& candidate) {
    const std::string c = text::fold(candidate);
    std::vector<KeypointVerdict> out;
    out.reserve(kps.size());
    for (const auto& kp : kps) out.push_back(match_keypoint(c, kp));
    return out;
}

Preference MockJudge::compare(const std::string&, const std::string& reference, const std::string& a,
                              const std::string& b, CompareAxis axis) {
    const auto kps = split_reference(reference);
    double sa, sb;
    if (axis == CompareAxis::Recall) {
        sa = static_cast<double>(recall_count(kps, a));
        sb = static_cast<double>(recall_count(kps, b));
    } else {
        sa = precision_share(kps, a);
        sb = precision_share(kps, b);
    }
    if (sa > sb) return Preference::A;
    if (sb > sa) return Preference::B;
    return Preference::Tie;
}

int MockJudge::usefulness(const std::string&, const std::string& reference, const std::string& candidate) {
    if (text::trim(candidate).empty()) return 0;
    const auto kps = split_reference(reference);
    if (kps.empty()) return 0;
    const double share = static_cast<double>(recall_count(kps, candidate)) / static_cast<double>(kps.size());
    return static_cast<int>(std::lround(10.0 * share));
}

} // namespace hyperrag
