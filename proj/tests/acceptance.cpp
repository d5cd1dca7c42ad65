// Acceptance checks. One PASS/FAIL/SKIP line per criterion; tolerances and
// time limits are fixed below.

#include "fixture_world.hpp"

#include "hyperrag/app.hpp"
#include "hyperrag/backend/judge.hpp"
#include "hyperrag/backend/live.hpp"
#include "hyperrag/evaluation.hpp"
#include "hyperrag/persistence.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace hyperrag;
using namespace hyperrag::testing;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict = Verdict::Pass;
    std::string detail;
};

struct Criterion {
    int number;
    const char* name;
    double limit_s;
    Outcome (*run)();
};

Outcome fail(std::string why) { return {Verdict::Fail, std::move(why)}; }

// --- 1: published advantage rows ------------------------------------------------

constexpr double kTableTolerance = 0.2;

Outcome advantage_table() {
    struct Row {
        const char* name;
        double rw, rt, rl, pw, pt, pl, printed;
    };
    const Row rows[] = {
        {"MedQA/vector", 48.5, 17.5, 34.0, 69.0, 2.5, 28.5, 28.4},
        {"MedQA/graph", 41.0, 6.5, 52.5, 57.0, 1.0, 42.0, -0.4},
        {"NLPEC/vector", 69.2, 8.3, 22.4, 81.2, 3.1, 15.6, 58.8},
        {"NLPEC/graph", 64.2, 7.4, 28.4, 73.2, 0.0, 26.7, 42.4},
        {"CMHD/vector", 8.0, 85.0, 7.0, 14.5, 76.0, 9.5, 13.2},
        {"CMHD/graph", 7.8, 60.4, 31.7, 19.8, 45.8, 34.3, -69.8},
        {"DDA/vector", 78.0, 18.0, 4.0, 95.0, 0.0, 5.0, 90.2},
        {"DDA/graph", 31.0, 46.0, 23.0, 78.0, 1.0, 21.0, 32.8},
        {"CMB-Clin/vector", 83.0, 0.5, 16.5, 84.5, 0.0, 15.5, 64.0},
        {"CMB-Clin/graph", 72.0, 0.5, 27.5, 74.0, 0.0, 26.0, 46.4},
    };
    std::ostringstream off;
    int matched = 0;
    for (const auto& r : rows) {
        const auto a = advantage_score(AxisShare{r.rw / 100, r.rt / 100, r.rl / 100},
                                       AxisShare{r.pw / 100, r.pt / 100, r.pl / 100});
        const double got = 100.0 * a.a;
        if (std::abs(got - r.printed) <= kTableTolerance) {
            ++matched;
        } else {
            off << " " << r.name << " computes " << std::fixed << std::setprecision(2) << got << " vs printed "
                << r.printed << ";";
        }
    }
    const std::string summary = std::to_string(matched) + "/10 rows within 0.2";
    if (matched == 10) return {Verdict::Pass, summary};
    return fail(summary + ";" + off.str());
}

// --- 2: exact weights on random graphs -------------------------------------------

Outcome random_graph_weights() {
    constexpr int kGraphs = 1000;
    Rng rng(2024);
    std::size_t edges = 0;
    for (int i = 0; i < kGraphs; ++i) {
        const std::size_t n_evidence = 1 + rng.below(50);
        const std::size_t n_names = 1 + rng.below(12);
        RandomGraph rg = random_graph(rng.next(), n_evidence, n_names);
        const Hypergraph& g = rg.graph;

        // Recount from the incidence rows kept outside the graph.
        std::map<std::string, std::set<std::uint32_t>> mentions; // name -> evidence index
        for (std::size_t e = 0; e < rg.evidence_entities.size(); ++e) {
            for (std::size_t m : rg.evidence_entities[e]) mentions[rg.names[m]].insert(static_cast<std::uint32_t>(e));
        }
        std::size_t expected_edges = 0;
        for (const auto& [tid, t] : g.topics()) {
            for (const auto& [name, rows] : mentions) {
                std::uint64_t hit = 0;
                for (EvidenceId e : t.evidence_ids) hit += rows.contains(e.value) ? 1 : 0;
                if (hit == 0) continue;
                ++expected_edges;
                const auto mid = g.find_entity(name);
                if (!mid) return fail("entity missing: " + name);
                const auto it = g.weights().find(EdgeKey{tid, *mid});
                if (it == g.weights().end()) return fail("missing edge " + to_string(tid) + "-" + to_string(*mid));
                const Fraction w = it->second;
                const std::uint64_t den = t.evidence_ids.size();
                if (std::uint64_t{w.num} * den != hit * std::uint64_t{w.den}) {
                    return fail("graph " + std::to_string(i) + " edge " + to_string(tid) + "-" + name + ": " +
                                std::to_string(w.num) + "/" + std::to_string(w.den) + " vs " + std::to_string(hit) +
                                "/" + std::to_string(den));
                }
            }
        }
        if (g.weights().size() != expected_edges) {
            return fail("graph " + std::to_string(i) + " has " + std::to_string(g.weights().size()) + " edges, recount " +
                        std::to_string(expected_edges));
        }
        edges += expected_edges;
    }
    return {Verdict::Pass, std::to_string(kGraphs) + " graphs, " + std::to_string(edges) + " edges exact"};
}

// --- 3: attention against a separate implementation ---------------------------------

Outcome attention_oracle() {
    constexpr int kInstances = 10000;
    constexpr double kTolerance = 1e-9;
    Rng rng(77);
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const std::size_t d = 2 + rng.below(63);
        const std::size_t n = 1 + rng.below(16);
        auto raw = [&] {
            std::vector<double> v(d);
            double s = 0;
            for (auto& x : v) {
                x = rng.uniform() * 2 - 1;
                s += x * x;
            }
            if (s == 0) v[0] = 1;
            return v;
        };
        auto norm = [](std::vector<double> v) {
            double s = 0;
            for (double x : v) s += x * x;
            for (double& x : v) x /= std::sqrt(s);
            return v;
        };
        const auto e_raw = raw();
        std::vector<std::vector<double>> f_raw;
        std::vector<double> u;
        for (std::size_t k = 0; k < n; ++k) {
            f_raw.push_back(raw());
            u.push_back(static_cast<double>(rng.below(11)));
        }

        // Oracle: cosines from unit vectors, softmax shifted by the maximum.
        const auto en = norm(e_raw);
        std::vector<double> cos(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto fn = norm(f_raw[k]);
            cos[k] = std::inner_product(en.begin(), en.end(), fn.begin(), 0.0);
        }
        const double top = *std::max_element(cos.begin(), cos.end());
        double z = 0, acc = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = std::exp(cos[k] - top);
            z += w;
            acc += u[k] * w;
        }
        const double expected = acc / z;

        std::vector<EmbeddingVector> fs;
        for (auto& f : f_raw) fs.push_back(EmbeddingVector::normalized(f));
        const double got = attention_score(EmbeddingVector::normalized(e_raw), fs, u);
        worst = std::max(worst, std::abs(got - expected));
        if (std::abs(got - expected) > kTolerance) {
            return fail("instance " + std::to_string(i) + ": " + std::to_string(got) + " vs " + std::to_string(expected));
        }
        const double lo = *std::min_element(u.begin(), u.end());
        const double hi = *std::max_element(u.begin(), u.end());
        if (got < lo - kTolerance || got > hi + kTolerance) return fail("score outside usefulness range");
    }
    std::ostringstream s;
    s << kInstances << " instances, max error " << std::scientific << std::setprecision(1) << worst;
    return {Verdict::Pass, s.str()};
}

// --- 4: walk frequencies and locality ----------------------------------------------------

Outcome walk_statistics() {
    constexpr double kTolerance = 0.02;
    constexpr std::size_t kWalks = 100000;
    auto s = star_graph(9, 1, 10);
    BipartiteView star(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    const auto f = random_walk_topics(star, seeds, 1, kWalks, 4);
    const double fa = f.count(s.a) ? f.at(s.a) / kWalks : 0.0;
    const double fb = f.count(s.b) ? f.at(s.b) / kWalks : 0.0;
    std::ostringstream d;
    d << std::fixed << std::setprecision(4) << "fractions " << fa << "/" << fb;
    if (std::abs(fa - 0.9) > kTolerance || std::abs(fb - 0.1) > kTolerance) return fail(d.str());

    const auto& w = FixtureWorld::get();
    BipartiteView view(w.graph());
    EntityLinker linker(w.graph(), *w.embedder);
    std::size_t checked = 0;
    for (const auto& q : w.queries) {
        const auto seeds_q = link_entities(extract_search_words(q.question, *w.chat), linker, 3);
        std::vector<int> de(view.entity_count(), -1), dt(view.topic_count(), -1);
        std::deque<std::pair<bool, std::size_t>> queue;
        for (EntityId id : seeds_q) {
            const auto i = *view.entity_index(id);
            if (de[i] < 0) {
                de[i] = 0;
                queue.emplace_back(false, i);
            }
        }
        while (!queue.empty()) {
            const auto [is_topic, i] = queue.front();
            queue.pop_front();
            const int dist = is_topic ? dt[i] : de[i];
            for (const auto& n : is_topic ? view.topic_neighbors(i) : view.entity_neighbors(i)) {
                int& dn = is_topic ? de[n.index] : dt[n.index];
                if (dn < 0) {
                    dn = dist + 1;
                    queue.emplace_back(!is_topic, n.index);
                }
            }
        }
        for (std::size_t alpha : {1u, 2u, 3u}) {
            const auto fq = random_walk_topics(view, seeds_q, alpha, 10000, derive_seed(9, alpha));
            for (const auto& [t, v] : fq) {
                const int dist = dt[*view.topic_index(t)];
                if (dist < 0 || dist > static_cast<int>(2 * alpha)) {
                    return fail(q.id + ": " + to_string(t) + " at distance " + std::to_string(dist) + " with alpha " +
                                std::to_string(alpha));
                }
                ++checked;
            }
        }
    }
    return {Verdict::Pass, d.str() + "; " + std::to_string(checked) + " visited topics within 2*alpha"};
}

// --- 5: fixture build, planted recall, replay ----------------------------------------------

std::string graph_bytes(const Hypergraph& g) {
    std::ostringstream s;
    write_graph(g, s);
    return s.str();
}

Outcome fixture_end_to_end() {
    const auto& w = FixtureWorld::get();
    const auto truth = nlohmann::json::parse(slurp(fixture_dir() / "ground_truth.json"));
    const auto& r = w.built.report;
    std::uint64_t num = 0, den = 1;
    for (const auto& [key, f] : w.graph().weights()) {
        num = num * f.den + f.num * den;
        den *= f.den;
        const auto g = std::gcd(num, den);
        num /= g;
        den /= g;
    }
    const std::string sum = std::to_string(num) + "/" + std::to_string(den);
    if (r.entities != truth["entities"] || r.topics != truth["topics"] || r.evidence != truth["evidence"] ||
        r.edges != truth["edges"] || r.documents_total != truth["documents"] ||
        r.duplicate_evidence != truth["duplicate_evidence"] || r.skipped.size() != truth["skipped"].size() ||
        sum != truth["weight_sum"]) {
        return fail("counts differ from ground truth: " + r.to_json().dump());
    }

    IngestionConfig cfg;
    cfg.normalization_path = (fixture_dir() / "normalization.tsv").string();
    MockChatBackend chat(lexicon_from_corpus(w.corpus));
    const auto again = build_graph(w.corpus, cfg, chat);
    if (graph_bytes(again.graph) != graph_bytes(w.graph())) return fail("second build differs");

    Retriever retriever(w.graph(), *w.embedder);
    const RetrievalConfig rc;
    const auto sc = SearchCondition::load("default");
    std::size_t found = 0, gold = 0;
    for (const auto& q : w.queries) {
        const auto a = retriever.retrieve(q.question, rc, sc, *w.chat, query_seed(7, q.id));
        const auto b = retriever.retrieve(q.question, rc, sc, *w.chat, query_seed(7, q.id));
        if (a.to_json(w.graph()).dump() != b.to_json(w.graph()).dump()) return fail(q.id + ": trace differs on replay");
        for (const auto& g : q.gold) {
            ++gold;
            for (const auto& e : a.evidence) {
                if (w.graph().evidence(e.id).description == g) {
                    ++found;
                    break;
                }
            }
        }
    }
    const std::string detail = "counts match, recall@" + std::to_string(rc.top_k) + " " + std::to_string(found) + "/" +
                               std::to_string(gold) + ", replay identical";
    if (found != gold) return fail(detail);
    return {Verdict::Pass, detail};
}

// --- 6: ranking, one-hop sampling and linking monotonicity -------------------------------------

Outcome retrieval_properties() {
    const auto& w = FixtureWorld::get();
    const Hypergraph& g = w.graph();
    Retriever retriever(g, *w.embedder);
    const auto sc = SearchCondition::load("default");
    std::vector<std::string> names;
    for (const auto& [id, m] : g.entities()) names.push_back(m.name);

    Rng rng(66);
    constexpr int kQueries = 100;
    for (int qi = 0; qi < kQueries; ++qi) {
        std::string query = "what links";
        const auto k = 1 + rng.below(3);
        for (std::uint64_t i = 0; i < k; ++i) query += (i ? " and " : " ") + names[rng.below(names.size())];
        query += "?";

        RetrievalConfig rc;
        rc.sampling = SamplingMode::Neighbor;
        rc.ranking = RankingMode::Cosine;
        rc.n_t = 1000000;
        rc.top_k = 1000000;
        rc.context_budget = 100000000;

        std::vector<EntityId> prev_linked;
        std::set<TopicId> prev_topics;
        std::set<EvidenceId> prev_pool;
        for (std::size_t n_m = 1; n_m <= 5; ++n_m) {
            rc.n_m = n_m;
            const auto r = retriever.retrieve(query, rc, sc, *w.chat, 1);
            if (!std::includes(r.linked.begin(), r.linked.end(), prev_linked.begin(), prev_linked.end())) {
                return fail("linked set shrank at n_m=" + std::to_string(n_m) + " for '" + query + "'");
            }
            const std::set<TopicId> topics(r.topics.begin(), r.topics.end());
            if (!std::includes(topics.begin(), topics.end(), prev_topics.begin(), prev_topics.end())) {
                return fail("topic set shrank at n_m=" + std::to_string(n_m));
            }

            // One-hop oracle from the stored weights.
            const std::set<EntityId> linked(r.linked.begin(), r.linked.end());
            std::map<TopicId, double> oracle;
            for (const auto& [key, f] : g.weights()) {
                if (linked.contains(key.entity)) oracle[key.topic] += f.value();
            }
            if (oracle.size() != r.frequencies.size()) return fail("neighbor topic count differs for '" + query + "'");
            for (const auto& [t, v] : oracle) {
                if (!r.frequencies.count(t) || std::abs(r.frequencies.at(t) - v) > 1e-12) {
                    return fail("neighbor weight differs at " + to_string(t));
                }
            }

            // Brute-force cosine ranking of the pool.
            std::set<EvidenceId> pool;
            for (TopicId t : r.topics) pool.insert(g.topic(t).evidence_ids.begin(), g.topic(t).evidence_ids.end());
            if (!std::includes(pool.begin(), pool.end(), prev_pool.begin(), prev_pool.end())) {
                return fail("candidate pool shrank at n_m=" + std::to_string(n_m));
            }
            const auto qv = w.embedder->embed(query);
            std::vector<std::pair<double, EvidenceId>> ranked;
            for (EvidenceId id : pool) ranked.emplace_back(brute_cosine(qv, w.embedder->embed(g.evidence(id).description)), id);
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            if (ranked.size() != r.evidence.size()) return fail("cosine ranking size differs");
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                if (ranked[i].second != r.evidence[i].id || std::abs(ranked[i].first - r.evidence[i].score) > 1e-12) {
                    return fail("cosine ranking differs at rank " + std::to_string(i) + " for '" + query + "'");
                }
            }
            prev_linked = r.linked;
            prev_topics = topics;
            prev_pool = std::move(pool);
        }
    }
    return {Verdict::Pass, std::to_string(kQueries) + " queries x n_m 1..5"};
}

// --- 7: keypoint hand count ------------------------------------------------------------

Outcome keypoint_hand_count() {
    std::vector<Sample> data(2);
    data[0].id = "k1";
    data[0].question = "Metformin and kidneys?";
    data[0].keypoints = {"lactic acidosis", "eGFR below 30", "stop before contrast"};
    data[1].id = "k2";
    data[1].question = "Warfarin with amiodarone?";
    data[1].keypoints = {"raises the INR", "reduce the warfarin dose", "bleeding"};
    const std::map<std::string, std::string> answers{
        {"k1", "Stop metformin when eGFR below 30 because of lactic acidosis risk."},
        {"k2", "Amiodarone raises the INR, so reduce the warfarin dose; there is no bleeding risk."},
    };
    MockJudge judge;
    const auto report = evaluate_keypoints(data, [&](const Sample& s) { return answers.at(s.id); }, judge, 1);
    const std::string detail = std::to_string(report.satisfied) + "/" + std::to_string(report.total);
    if (report.satisfied != 4 || report.total != 6 || std::abs(report.score - 4.0 / 6.0) > 1e-12) return fail(detail);
    return {Verdict::Pass, detail};
}

// --- 8: chunking invariants -------------------------------------------------------------------

Outcome chunking_invariants() {
    constexpr int kDocuments = 1000;
    IngestionConfig cfg; // window 1024, overlap 200
    if (cfg.window != 1024 || cfg.overlap != 200) return fail("unexpected default window");
    Rng rng(8);
    const char* spaces[] = {" ", "  ", "\n", "\t", " \n "};
    std::size_t chunks = 0;
    for (int i = 0; i < kDocuments; ++i) {
        const std::size_t n = 1 + rng.below(4000);
        std::string body;
        std::vector<std::pair<std::size_t, std::size_t>> spans; // oracle token byte ranges
        for (std::size_t t = 0; t < n; ++t) {
            if (t) body += spaces[rng.below(5)];
            std::string word = "w" + std::to_string(rng.below(100000));
            spans.emplace_back(body.size(), body.size() + word.size());
            body += word;
        }
        const auto units = split_document({"d" + std::to_string(i), "t", "", body, "en"}, cfg);
        const std::size_t expected = n <= 1024 ? 1 : 1 + (n - 1024 + 823) / 824;
        if (units.size() != expected) {
            return fail("doc " + std::to_string(i) + ": " + std::to_string(units.size()) + " chunks, expected " +
                        std::to_string(expected));
        }
        for (std::size_t k = 0; k < units.size(); ++k) {
            const auto& u = units[k];
            const std::size_t begin = k * 824;
            const std::size_t end = std::min(begin + 1024, n);
            if (u.chunk_index != k || u.token_begin != begin || u.token_end != end) return fail("bad token range");
            if (k + 1 < units.size() && (end - begin != 1024 || end - (begin + 824) != 200)) return fail("bad overlap");
            const std::string want = body.substr(spans[begin].first, spans[end - 1].second - spans[begin].first);
            if (u.content != want) return fail("doc " + std::to_string(i) + " chunk " + std::to_string(k) + " text");
        }
        if (units.back().token_end != n) return fail("tail not covered");
        chunks += units.size();
    }
    return {Verdict::Pass, std::to_string(kDocuments) + " documents, " + std::to_string(chunks) + " chunks"};
}

// --- 9: live smoke ----------------------------------------------------------------------------

Outcome live_smoke() {
    const char* path = std::getenv("HYPERRAG_LIVE_CONFIG");
    if (!path) return {Verdict::Skip, "HYPERRAG_LIVE_CONFIG not set"};
    AppConfig cfg = AppConfig::load(path);
    if (!std::getenv(cfg.key_env.c_str())) return {Verdict::Skip, cfg.key_env + " not set"};
    cfg.mock = false;

    auto corpus = load_corpus(fixture_dir() / "corpus");
    corpus.resize(3);
    for (auto& d : corpus) {
        d.title = MockChatBackend::strip_markup(d.title);
        d.abstract = MockChatBackend::strip_markup(d.abstract);
        d.body = MockChatBackend::strip_markup(d.body);
    }
    LiveChatBackend chat(EndpointConfig::from_json(cfg.chat, cfg.key_env));
    const auto built = build_graph(corpus, cfg.ingestion, chat);
    const auto& r = built.report;
    BackendUsage sum;
    std::ostringstream d;
    for (const auto& [stage, u] : r.stage_usage) {
        sum += u;
        d << stage << "=" << u.total_tokens() << " ";
    }
    d << "total=" << r.usage.total_tokens();
    if (r.usage.total_tokens() == 0) return fail("no tokens recorded");
    if (!(sum == r.usage)) return fail("stage tallies do not add up: " + d.str());
    if (!(chat.usage() == r.usage)) return fail("backend and report disagree: " + d.str());
    return {Verdict::Pass, d.str()};
}

const Criterion kCriteria[] = {
    {1, "advantage table", 1.0, advantage_table},
    {2, "exact weights", 10.0, random_graph_weights},
    {3, "attention oracle", 10.0, attention_oracle},
    {4, "walk statistics", 30.0, walk_statistics},
    {5, "fixture end to end", 120.0, fixture_end_to_end},
    {6, "retrieval properties", 60.0, retrieval_properties},
    {7, "keypoint count", 1.0, keypoint_hand_count},
    {8, "chunking", 5.0, chunking_invariants},
    {9, "live smoke", 600.0, live_smoke},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "run one criterion (1-9)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::off);

    int failed = 0, passed = 0;
    for (const auto& c : kCriteria) {
        if (only && c.number != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.verdict == Verdict::Pass && secs >= c.limit_s) {
            o = fail(o.detail + "; took " + std::to_string(secs) + "s, limit " + std::to_string(c.limit_s) + "s");
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        std::printf("criterion %d %s: %s (%s) [%.2fs]\n", c.number, tag, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.verdict == Verdict::Fail;
        passed += o.verdict == Verdict::Pass;
    }
    if (failed) return 1;
    return passed ? 0 : 77;
}
