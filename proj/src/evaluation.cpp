#include "hyperrag/evaluation.hpp"

#include "hyperrag/error.hpp"
#include "hyperrag/parallel.hpp"
#include "hyperrag/rng.hpp"
#include "hyperrag/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>

namespace hyperrag {

using nlohmann::json;

// --- dataset -------------------------------------------------------------------

namespace {

Sample parse_sample(const json& j, std::size_t line) {
    const std::string where = "line " + std::to_string(line) + ": ";
    if (!j.is_object()) throw Error(ErrorCode::CorruptFile, where + "row must be an object");
    Sample s;
    try {
        s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        s.question = j.at("question").get<std::string>();
        if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
            s.gold_answer = j["gold_answer"].get<std::string>();
        }
        if (j.contains("keypoints")) s.keypoints = j["keypoints"].get<std::vector<std::string>>();
        if (j.contains("options")) {
            const json& o = j["options"];
            if (o.is_object()) {
                for (const auto& [k, v] : o.items()) s.options.emplace_back(k, v.get<std::string>());
            } else {
                char key = 'A';
                for (const auto& v : o) s.options.emplace_back(std::string(1, key++), v.get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, where + e.what());
    }
    if (text::trim(s.question).empty()) throw Error(ErrorCode::CorruptFile, where + "empty question");
    return s;
}

} // namespace

std::vector<Sample> read_dataset(std::istream& in) {
    std::vector<Sample> out;
    std::set<std::string> ids;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::CorruptFile, "line " + std::to_string(number) + ": " + e.what());
        }
        Sample s = parse_sample(j, number);
        if (!ids.insert(s.id).second) {
            throw Error(ErrorCode::CorruptFile, "line " + std::to_string(number) + ": duplicate id " + s.id);
        }
        out.push_back(std::move(s));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read dataset " + path.string());
    return read_dataset(in);
}

std::string format_options(const Sample& s) {
    std::string out;
    for (const auto& [k, v] : s.options) out += k + ". " + v + "\n";
    return out;
}

// --- key points ---------------------------------------------------------------

double keypoint_score(const std::vector<std::vector<KeypointVerdict>>& verdicts) {
    std::size_t satisfied = 0, total = 0;
    for (const auto& sample : verdicts) {
        total += sample.size();
        for (const auto& v : sample) satisfied += (v.covered && !v.contradicted) ? 1 : 0;
    }
    if (total == 0) throw Error(ErrorCode::EmptyDataset, "no keypoints to score");
    return static_cast<double>(satisfied) / static_cast<double>(total);
}

std::vector<KeypointVerdict> CachingJudge::keypoints(const std::string& question,
                                                     const std::vector<std::string>& keypoints,
                                                     const std::string& candidate) {
    const auto key = std::make_pair(question, text::fnv1a(candidate));
    {
        std::lock_guard lock(mu_);
        if (const auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    auto verdicts = inner_.keypoints(question, keypoints, candidate);
    std::lock_guard lock(mu_);
    ++misses_;
    cache_.emplace(key, verdicts);
    return verdicts;
}

std::size_t CachingJudge::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

std::size_t CachingJudge::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

// --- advantage -------------------------------------------------------------------

AxisShare AxisCounts::share() const {
    const std::size_t n = total();
    if (n == 0) throw Error(ErrorCode::DegenerateTally, "no comparisons on this axis");
    const double d = static_cast<double>(n);
    return {static_cast<double>(win) / d, static_cast<double>(tie) / d, static_cast<double>(loss) / d};
}

void AxisCounts::add(Preference p_for_a) {
    switch (p_for_a) {
    case Preference::A: ++win; break;
    case Preference::B: ++loss; break;
    case Preference::Tie: ++tie; break;
    }
}

Advantage advantage_score(const AxisShare& recall, const AxisShare& precision) {
    for (const AxisShare* s : {&recall, &precision}) {
        if (s->win < 0.0 || s->tie < 0.0 || s->loss < 0.0 || s->win > 1.0 || s->tie > 1.0 || s->loss > 1.0) {
            throw Error(ErrorCode::DegenerateTally, "shares must lie in [0, 1]");
        }
        if (s->tie >= 1.0) throw Error(ErrorCode::DegenerateTally, "every comparison on an axis is a tie");
    }
    Advantage adv;
    adv.r = recall.win / (1.0 - recall.tie);
    adv.p = precision.win / (1.0 - precision.tie);
    if (adv.r + adv.p == 0.0) throw Error(ErrorCode::DegenerateTally, "r + p = 0");
    adv.a = 4.0 * adv.r * adv.p / (adv.r + adv.p) - 1.0;
    return adv;
}

Advantage advantage_score(const Tally& t) { return advantage_score(t.recall.share(), t.precision.share()); }

// --- runs --------------------------------------------------------------------------

namespace {

json exclusions_json(const std::vector<Exclusion>& ex) {
    json out = json::array();
    for (const auto& e : ex) out.push_back({{"id", e.id}, {"reason", e.reason}});
    return out;
}

std::string reference_for(const Sample& s) {
    if (s.keypoints.empty()) return s.gold_answer.value_or("");
    std::string out;
    for (const auto& k : s.keypoints) out += k + "\n";
    return out;
}

// Indices of `dataset` in ascending sample id order.
std::vector<std::size_t> id_order(const std::vector<Sample>& dataset) {
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dataset[a].id < dataset[b].id; });
    return order;
}

json axis_json(const AxisCounts& c) { return {{"win", c.win}, {"tie", c.tie}, {"loss", c.loss}}; }

} // namespace

json CompareReport::to_json() const {
    json adv = nullptr;
    if (advantage) {
        adv = {{"r", advantage->r}, {"p", advantage->p}, {"a", advantage->a}, {"a_x100", advantage->a * 100.0}};
    }
    return {{"mode", "compare"},
            {"seed", seed},
            {"judge_model", judge_model},
            {"tally", {{"recall", axis_json(tally.recall)}, {"precision", axis_json(tally.precision)}}},
            {"advantage", adv},
            {"excluded", exclusions_json(excluded)},
            {"rows", rows}};
}

CompareReport compare_retrievers(const std::vector<Sample>& dataset, const ContextFn& a, const ContextFn& b,
                                 Judge& judge, const CompareOptions& opts) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    struct Row {
        std::optional<Preference> recall, precision;
        bool a_first_recall = true, a_first_precision = true;
        std::string error;
    };
    std::vector<Row> rows(dataset.size());

    parallel_for(dataset.size(), opts.max_in_flight, [&](std::size_t i) {
        const Sample& s = dataset[i];
        Row& row = rows[i];
        try {
            const std::string ctx_a = a(s);
            const std::string ctx_b = b(s);
            const std::string ref = reference_for(s);
            Rng coin(derive_seed(opts.seed, text::fnv1a(s.id)));
            auto ask = [&](CompareAxis axis, bool& a_first) {
                a_first = coin.below(2) == 0;
                const Preference p = a_first ? judge.compare(s.question, ref, ctx_a, ctx_b, axis)
                                             : judge.compare(s.question, ref, ctx_b, ctx_a, axis);
                if (a_first || p == Preference::Tie) return p;
                return p == Preference::A ? Preference::B : Preference::A;
            };
            row.recall = ask(CompareAxis::Recall, row.a_first_recall);
            row.precision = ask(CompareAxis::Precision, row.a_first_precision);
        } catch (const std::exception& e) {
            row.recall.reset();
            row.precision.reset();
            row.error = e.what();
        }
    });

    CompareReport report;
    report.seed = opts.seed;
    report.judge_model = judge.model_name();
    for (std::size_t i : id_order(dataset)) {
        const Row& row = rows[i];
        if (!row.recall || !row.precision) {
            spdlog::warn("sample {} excluded: {}", dataset[i].id, row.error);
            report.excluded.push_back({dataset[i].id, row.error});
            continue;
        }
        report.tally.recall.add(*row.recall);
        report.tally.precision.add(*row.precision);
        report.rows.push_back({{"id", dataset[i].id},
                               {"recall", std::string(to_string(*row.recall))},
                               {"precision", std::string(to_string(*row.precision))},
                               {"a_shown_first", {{"recall", row.a_first_recall}, {"precision", row.a_first_precision}}}});
    }
    if (report.tally.recall.total() > 0) {
        try {
            report.advantage = advantage_score(report.tally);
        } catch (const Error& e) {
            spdlog::warn("advantage undefined: {}", e.what());
        }
    }
    return report;
}

json KeypointReport::to_json() const {
    return {{"mode", "keypoint"},
            {"judge_model", judge_model},
            {"score", score},
            {"satisfied", satisfied},
            {"total", total},
            {"excluded", exclusions_json(excluded)},
            {"rows", rows}};
}

KeypointReport evaluate_keypoints(const std::vector<Sample>& dataset, const ContextFn& answer, Judge& judge,
                                  std::size_t max_in_flight) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    struct Row {
        std::optional<std::vector<KeypointVerdict>> verdicts;
        std::string error;
    };
    std::vector<Row> rows(dataset.size());
    parallel_for(dataset.size(), max_in_flight, [&](std::size_t i) {
        const Sample& s = dataset[i];
        if (s.keypoints.empty()) {
            rows[i].error = "no keypoints";
            return;
        }
        try {
            auto v = judge.keypoints(s.question, s.keypoints, answer(s));
            if (v.size() != s.keypoints.size()) {
                throw Error(ErrorCode::LengthMismatch, "judge returned the wrong number of verdicts");
            }
            rows[i].verdicts = std::move(v);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });

    KeypointReport report;
    report.judge_model = judge.model_name();
    std::vector<std::vector<KeypointVerdict>> kept;
    for (std::size_t i : id_order(dataset)) {
        if (!rows[i].verdicts) {
            report.excluded.push_back({dataset[i].id, rows[i].error});
            continue;
        }
        std::size_t ok = 0;
        json flags = json::array();
        for (const auto& v : *rows[i].verdicts) {
            ok += (v.covered && !v.contradicted) ? 1 : 0;
            flags.push_back({{"covered", v.covered}, {"contradicted", v.contradicted}});
        }
        report.satisfied += ok;
        report.total += rows[i].verdicts->size();
        report.rows.push_back({{"id", dataset[i].id}, {"satisfied", ok}, {"verdicts", flags}});
        kept.push_back(std::move(*rows[i].verdicts));
    }
    report.score = kept.empty() ? 0.0 : keypoint_score(kept);
    return report;
}

json ClassificationMetrics::to_json() const {
    return {{"n", n},
            {"correct", correct},
            {"accuracy", accuracy},
            {"confusion", {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}}},
            {"precision", precision},
            {"recall", recall},
            {"f1", f1}};
}

ClassificationMetrics accuracy_and_f1(const std::vector<std::string>& predictions,
                                      const std::vector<std::string>& gold, const std::string& positive) {
    if (predictions.size() != gold.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                                   std::to_string(gold.size()) + " gold labels");
    }
    if (gold.empty()) throw Error(ErrorCode::EmptyDataset, "no predictions to score");
    ClassificationMetrics m;
    m.n = gold.size();
    const std::string pos = text::fold(positive);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const std::string p = text::fold(predictions[i]);
        const std::string g = text::fold(gold[i]);
        m.correct += p == g ? 1 : 0;
        const bool pp = p == pos, gp = g == pos;
        if (pp && gp) ++m.tp;
        else if (pp) ++m.fp;
        else if (gp) ++m.fn;
        else ++m.tn;
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.accuracy = ratio(m.correct, m.n);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
    return m;
}

std::string parse_choice(const std::string& answer, const Sample& s) {
    const std::string folded = text::fold(answer);
    for (const auto& [key, value] : s.options) {
        const std::string k = text::fold(key);
        for (const std::string& form : {k, "(" + k + ")", k + ".", k + ")", k + ":"}) {
            if (folded == form) return key;
            if (form != k && folded.size() > form.size() && folded.compare(0, form.size(), form) == 0 &&
                !std::isalnum(static_cast<unsigned char>(folded[form.size()]))) {
                return key;
            }
        }
    }
    for (const auto& [key, value] : s.options) {
        if (!text::trim(value).empty() && text::contains_folded(answer, value)) return key;
    }
    return folded;
}

} // namespace hyperrag
