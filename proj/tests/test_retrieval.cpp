#include "fixture_world.hpp"

#include "hyperrag/backend/mock_chat.hpp"
#include "hyperrag/error.hpp"
#include "hyperrag/retrieval.hpp"
#include "hyperrag/text.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

using namespace hyperrag;
using namespace hyperrag::testing;
using nlohmann::json;

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

std::string terms_reply(std::initializer_list<const char*> terms) {
    json j;
    j["terms"] = json::array();
    for (const char* t : terms) j["terms"].push_back(t);
    return j.dump();
}

std::optional<EvidenceId> evidence_by_text(const Hypergraph& g, const std::string& desc) {
    for (const auto& [id, ev] : g.evidence()) {
        if (ev.description == desc) return id;
    }
    return std::nullopt;
}

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector::normalized(std::move(v)); }

} // namespace

// --- configuration -------------------------------------------------------------

TEST(RetrievalConfig, RejectsUnknownKey) {
    EXPECT_EQ(code_of([] { RetrievalConfig::from_json(json{{"n_x", 3}}); }), ErrorCode::InvalidConfig);
}

TEST(RetrievalConfig, RoundTripsThroughJson) {
    RetrievalConfig c;
    c.n_m = 5;
    c.sampling = SamplingMode::Ppr;
    c.ranking = RankingMode::Cosine;
    const auto back = RetrievalConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(RetrievalConfig, ZeroCountsFailValidation) {
    for (const char* key : {"n_m", "n_t", "n_p", "alpha", "beta", "top_k", "context_budget"}) {
        EXPECT_EQ(code_of([&] { RetrievalConfig::from_json(json{{key, 0}}); }), ErrorCode::InvalidConfig) << key;
    }
    EXPECT_EQ(code_of([] { RetrievalConfig::from_json(json{{"sampling", "bfs"}}); }), ErrorCode::InvalidConfig);
}

TEST(SearchConditionTest, ProfilesLoadByName) {
    const auto profiles = available_profiles();
    EXPECT_EQ(profiles, (std::vector<std::string>{"cmb-clin", "cmhd", "dda", "default", "medqa", "nlpec"}));
    const auto dda = SearchCondition::load("dda");
    EXPECT_EQ(dda.name, "dda");
    EXPECT_FALSE(dda.rules.empty());
    EXPECT_NE(dda.rules, SearchCondition::load("default").rules);
    EXPECT_EQ(code_of([] { SearchCondition::load("nosuch"); }), ErrorCode::InvalidConfig);
}

// --- search words --------------------------------------------------------------

TEST(SearchWords, ShortListRepromptsOnceThenWarns) {
    ScriptedChatBackend chat;
    chat.push_reply(terms_reply({"a", "b", "c"}));
    chat.push_reply(terms_reply({"a", "b", "c"}));
    std::vector<std::string> warnings;
    const auto terms = extract_search_words("q", chat, &warnings);
    EXPECT_EQ(terms, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(chat.requests().size(), 2u);
    EXPECT_TRUE(chat.requests()[1].reprompt);
    ASSERT_EQ(warnings.size(), 1u);
}

TEST(SearchWords, DeduplicatesCaseInsensitively) {
    ScriptedChatBackend chat;
    chat.push_reply(terms_reply({"Warfarin", "warfarin ", "inr", "INR", "bleeding", "vitamin k", "diet"}));
    const auto terms = extract_search_words("q", chat);
    EXPECT_EQ(terms, (std::vector<std::string>{"Warfarin", "inr", "bleeding", "vitamin k", "diet"}));
    EXPECT_EQ(chat.requests().size(), 1u);
}

TEST(SearchWords, EmptyQueryIsRejected) {
    ScriptedChatBackend chat;
    EXPECT_EQ(code_of([&] { extract_search_words("   ", chat); }), ErrorCode::EmptyInput);
    EXPECT_TRUE(chat.requests().empty());
}

TEST(SearchWords, MockReturnsAnnotatedTerms) {
    const auto& w = FixtureWorld::get();
    const auto terms = extract_search_words(w.queries[1].question, *w.chat);
    EXPECT_EQ(terms, (std::vector<std::string>{"warfarin", "amiodarone", "inr", "bleeding", "atrial fibrillation"}));
}

// --- entity linking ------------------------------------------------------------

TEST(Linking, ExactNameRanksFirst) {
    const auto& w = FixtureWorld::get();
    EntityLinker linker(w.graph(), *w.embedder);
    EXPECT_EQ(linker.size(), w.graph().entities().size());
    for (const auto& [id, m] : w.graph().entities()) {
        const auto ranked = linker.rank(m.name);
        ASSERT_FALSE(ranked.empty());
        EXPECT_NEAR(ranked.front().cosine, 1.0, 1e-9) << m.name;
        // Ties at 1.0 are possible only between names that embed identically.
        const auto self = std::find_if(ranked.begin(), ranked.end(), [&](const auto& c) { return c.id == id; });
        EXPECT_NEAR(self->cosine, 1.0, 1e-9);
    }
}

TEST(Linking, RankMatchesBruteForceCosineSort) {
    const auto& w = FixtureWorld::get();
    EntityLinker linker(w.graph(), *w.embedder);
    for (const std::string term : {"warfarin", "kidney", "heart failure", "cough", "blood sugar"}) {
        const auto q = w.embedder->embed(term);
        std::vector<std::pair<double, EntityId>> oracle;
        for (const auto& [id, m] : w.graph().entities()) oracle.emplace_back(brute_cosine(q, w.embedder->embed(m.name)), id);
        std::sort(oracle.begin(), oracle.end(),
                  [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
        const auto ranked = linker.rank(term);
        ASSERT_EQ(ranked.size(), oracle.size());
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_EQ(ranked[i].id, oracle[i].second) << term << " @" << i;
            EXPECT_NEAR(ranked[i].cosine, oracle[i].first, 1e-12);
        }
    }
}

TEST(Linking, UnionOfTopNPerTerm) {
    const auto& w = FixtureWorld::get();
    EntityLinker linker(w.graph(), *w.embedder);
    auto top3 = [&](const std::string& term) {
        std::set<EntityId> s;
        for (std::size_t i = 0; i < 3; ++i) s.insert(linker.rank(term)[i].id);
        return s;
    };
    // Terms that hit at least three names, so no zero-cosine ties reach the top 3.
    const std::vector<std::string> pool{"kidney disease liver disease end stage renal", "chest pain chest radiograph",
                                        "hypokalemia hyperkalemia hypoglycemia"};
    std::vector<std::string> terms;
    for (std::size_t i = 0; i < pool.size() && terms.empty(); ++i) {
        for (std::size_t j = i + 1; j < pool.size() && terms.empty(); ++j) {
            const auto a = top3(pool[i]);
            const auto b = top3(pool[j]);
            std::vector<EntityId> both;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
            if (both.empty()) terms = {pool[i], pool[j]};
        }
    }
    ASSERT_EQ(terms.size(), 2u);
    const auto linked = link_entities(terms, linker, 3);
    EXPECT_EQ(linked.size(), 6u);
    EXPECT_TRUE(std::is_sorted(linked.begin(), linked.end()));

    const auto one = link_entities(std::span(terms).first(1), linker, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], linker.rank(terms[0])[0].id);
}

TEST(Linking, LargerNmLinksASuperset) {
    const auto& w = FixtureWorld::get();
    EntityLinker linker(w.graph(), *w.embedder);
    for (const auto& q : w.queries) {
        const auto terms = extract_search_words(q.question, *w.chat);
        std::vector<EntityId> prev;
        for (std::size_t n = 1; n <= 6; ++n) {
            const auto cur = link_entities(terms, linker, n);
            EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << q.id << " n_m=" << n;
            prev = cur;
        }
    }
}

// --- topic sampling ------------------------------------------------------------

TEST(Walk, SingleTopicIsVisitedByEveryWalk) {
    auto s = star_graph(3, 0, 4); // topic b has no seed edge
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    const auto f = random_walk_topics(view, seeds, 1, 500, 11);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.at(s.a), 500.0);
}

TEST(Walk, OneStepFrequenciesFollowWeights) {
    auto s = star_graph(9, 1, 10);
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    const std::size_t beta = 100000;
    const auto f = random_walk_topics(view, seeds, 1, beta, 3);
    EXPECT_NEAR(f.at(s.a) / beta, 0.9, 0.02);
    EXPECT_NEAR(f.at(s.b) / beta, 0.1, 0.02);
    EXPECT_EQ(f.at(s.a) + f.at(s.b), static_cast<double>(beta));

    const auto u = random_walk_topics(view, seeds, 1, beta, 3, true);
    EXPECT_NEAR(u.at(s.a) / beta, 0.5, 0.02);
}

TEST(Walk, CountsEachWalkOncePerTopic) {
    auto s = star_graph(9, 1, 10);
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    const std::size_t beta = 2000;
    const auto f = random_walk_topics(view, seeds, 6, beta, 5);
    for (const auto& [t, v] : f) EXPECT_LE(v, static_cast<double>(beta));
}

TEST(Walk, RejectsBadInput) {
    auto s = star_graph(9, 1, 10);
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    EXPECT_EQ(code_of([&] { random_walk_topics(view, seeds, 0, 10, 1); }), ErrorCode::InvalidConfig);
    const std::vector<EntityId> unknown{EntityId{999}};
    EXPECT_EQ(code_of([&] { random_walk_topics(view, unknown, 1, 10, 1); }), ErrorCode::UnknownId);

    Hypergraph g;
    const EvidenceId e = g.add_evidence(make_evidence("lonely"));
    const EntityId m = g.link_entity(e, "hermit", "drug");
    g.freeze();
    BipartiteView isolated(g);
    const std::vector<EntityId> lone{m};
    EXPECT_EQ(code_of([&] { random_walk_topics(isolated, lone, 2, 10, 1); }), ErrorCode::IsolatedSeeds);
    EXPECT_EQ(code_of([&] { neighbor_topics(isolated, lone); }), ErrorCode::IsolatedSeeds);
    EXPECT_EQ(code_of([&] { ppr_topics(isolated, lone, 0.15, 10); }), ErrorCode::IsolatedSeeds);
}

TEST(Walk, StaysWithinReach) {
    const auto& w = FixtureWorld::get();
    BipartiteView view(w.graph());
    EntityLinker linker(w.graph(), *w.embedder);
    for (const auto& q : w.queries) {
        const auto terms = extract_search_words(q.question, *w.chat);
        const auto seeds = link_entities(terms, linker, 2);
        for (std::size_t alpha : {1u, 2u}) {
            // Breadth-first distances over the bipartite graph; topics get odd distances.
            std::vector<int> dist_e(view.entity_count(), -1), dist_t(view.topic_count(), -1);
            std::deque<std::pair<bool, std::size_t>> queue; // (is_topic, index)
            for (EntityId s : seeds) {
                const auto i = *view.entity_index(s);
                if (dist_e[i] < 0) {
                    dist_e[i] = 0;
                    queue.emplace_back(false, i);
                }
            }
            while (!queue.empty()) {
                auto [is_topic, i] = queue.front();
                queue.pop_front();
                const int d = is_topic ? dist_t[i] : dist_e[i];
                for (const auto& n : is_topic ? view.topic_neighbors(i) : view.entity_neighbors(i)) {
                    auto& dn = is_topic ? dist_e[n.index] : dist_t[n.index];
                    if (dn < 0) {
                        dn = d + 1;
                        queue.emplace_back(!is_topic, n.index);
                    }
                }
            }
            try {
                const auto f = random_walk_topics(view, seeds, alpha, 2000, 17);
                for (const auto& [t, v] : f) {
                    const int d = dist_t[*view.topic_index(t)];
                    EXPECT_GE(d, 1);
                    EXPECT_LE(d, static_cast<int>(2 * alpha)) << q.id;
                }
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::IsolatedSeeds);
            }
        }
    }
}

TEST(Walk, SameSeedSameFrequencies) {
    auto s = star_graph(7, 3, 10);
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    EXPECT_EQ(random_walk_topics(view, seeds, 3, 5000, 42), random_walk_topics(view, seeds, 3, 5000, 42));
    EXPECT_NE(random_walk_topics(view, seeds, 3, 5000, 42), random_walk_topics(view, seeds, 3, 5000, 43));
}

TEST(Neighbor, SumsOneHopWeights) {
    const auto& w = FixtureWorld::get();
    BipartiteView view(w.graph());
    // Seeds: every fifth entity, one of them listed twice.
    std::vector<EntityId> seeds;
    for (const auto& [id, m] : w.graph().entities()) {
        if (id.value % 5 == 0) seeds.push_back(id);
    }
    seeds.push_back(seeds.front());
    std::map<TopicId, double> oracle;
    const std::set<EntityId> unique(seeds.begin(), seeds.end());
    for (const auto& [key, weight] : w.graph().weights()) {
        if (unique.contains(key.entity)) oracle[key.topic] += weight.value();
    }
    const auto f = neighbor_topics(view, seeds);
    ASSERT_EQ(f.size(), oracle.size());
    for (const auto& [t, v] : oracle) EXPECT_NEAR(f.at(t), v, 1e-12);
}

TEST(Ppr, MassIsAProbabilityOnTheStar) {
    auto s = star_graph(9, 1, 10);
    BipartiteView view(s.graph);
    const std::vector<EntityId> seeds{s.seed};
    const auto f = ppr_topics(view, seeds, 0.15, 50);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_GT(f.at(s.a), f.at(s.b));
    EXPECT_LT(f.at(s.a) + f.at(s.b), 1.0);
}

TEST(SelectTopics, OrdersByFrequencyThenId) {
    const TopicFrequencies f{{TopicId{2}, 5.0}, {TopicId{0}, 10.0}, {TopicId{1}, 5.0}, {TopicId{3}, 0.0}};
    EXPECT_EQ(select_topics(f, 2), (std::vector<TopicId>{TopicId{0}, TopicId{1}}));
    EXPECT_EQ(select_topics(f, 10).size(), 3u);
}

TEST(SelectTopics, MatchesSortOracleOnRandomInput) {
    Rng rng(8);
    for (int round = 0; round < 200; ++round) {
        TopicFrequencies f;
        const auto n = rng.below(40);
        for (std::uint64_t i = 0; i < n; ++i) f[TopicId{static_cast<std::uint32_t>(rng.below(60))}] = static_cast<double>(rng.below(6));
        const std::size_t n_t = 1 + rng.below(10);
        std::vector<std::pair<double, std::uint32_t>> items;
        for (const auto& [t, v] : f) {
            if (v > 0) items.emplace_back(-v, t.value);
        }
        std::sort(items.begin(), items.end());
        std::vector<TopicId> oracle;
        for (std::size_t i = 0; i < std::min(n_t, items.size()); ++i) oracle.push_back(TopicId{items[i].second});
        EXPECT_EQ(select_topics(f, n_t), oracle);
    }
}

TEST(Packaging, BalancedAndComplete) {
    std::vector<TopicId> topics;
    for (std::uint32_t i = 0; i < 10; ++i) topics.push_back(TopicId{i});
    const auto p = package_topics(topics, 4, 99);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[0].size(), 3u);
    EXPECT_EQ(p[1].size(), 3u);
    EXPECT_EQ(p[2].size(), 2u);
    EXPECT_EQ(p[3].size(), 2u);
    std::vector<TopicId> all;
    for (const auto& pk : p) all.insert(all.end(), pk.begin(), pk.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, topics);
    EXPECT_EQ(package_topics(topics, 4, 99), p);
}

TEST(Packaging, SinglePackageIsStillShuffled) {
    std::vector<TopicId> topics;
    for (std::uint32_t i = 0; i < 20; ++i) topics.push_back(TopicId{i});
    const auto p = package_topics(topics, 1, 5);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NE(p[0], topics);
    EXPECT_TRUE(std::is_permutation(p[0].begin(), p[0].end(), topics.begin()));
}

TEST(Packaging, FewTopicsDropEmptyPackages) {
    const std::vector<TopicId> topics{TopicId{4}, TopicId{9}};
    EXPECT_EQ(package_topics(topics, 5, 1).size(), 2u);
    EXPECT_TRUE(package_topics({}, 3, 1).empty());
    EXPECT_EQ(code_of([&] { package_topics(topics, 0, 1); }), ErrorCode::InvalidConfig);
}

// --- features ------------------------------------------------------------------

TEST(Features, ClampsUsefulnessAndSkipsFailedPackages) {
    auto s = star_graph(9, 1, 10);
    ScriptedChatBackend chat;
    chat.push_reply(R"({"features":[{"feature":"raises inr","usefulness":12},{"feature":"bleeds","usefulness":4}]})");
    const std::vector<std::vector<TopicId>> one{{s.a, s.b}};
    std::vector<std::string> warnings;
    const auto f = extract_features("q", one, s.graph, SearchCondition::load("default"), chat, 1, &warnings);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f[0].usefulness, 10.0);
    EXPECT_EQ(f[1].usefulness, 4.0);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("clamped"), std::string::npos);
    // The prompt lists both topics of the package.
    ASSERT_EQ(chat.requests().size(), 1u);
    const auto& topics = chat.requests()[0].bindings.at("topics");
    EXPECT_NE(topics.find("anchor a"), std::string::npos);
    EXPECT_NE(topics.find("anchor b"), std::string::npos);

    ScriptedChatBackend failing;
    failing.push_error(ErrorCode::Unavailable);
    warnings.clear();
    const auto none = extract_features("q", one, s.graph, SearchCondition::load("default"), failing, 1, &warnings);
    EXPECT_TRUE(none.empty());
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("skipped"), std::string::npos);
}

TEST(Features, MockEmitsFeaturesForMatchingTopics) {
    const auto& w = FixtureWorld::get();
    // Every topic in one package: the mock returns each annotated feature whose
    // (entity, label) topic exists.
    std::vector<TopicId> all;
    for (const auto& [id, t] : w.graph().topics()) all.push_back(id);
    const std::vector<std::vector<TopicId>> one{all};
    const auto f = extract_features(w.queries[1].question, one, w.graph(), SearchCondition::load("dda"), *w.chat);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0].text, "amiodarone raises the inr in patients on warfarin");
    EXPECT_EQ(f[0].usefulness, 9.0);
}

// --- scoring -------------------------------------------------------------------

TEST(Scoring, HandValues) {
    const auto e = vec({1, 0});
    const std::vector<EmbeddingVector> single{vec({0.3, 0.7})};
    const std::vector<double> seven{7.0};
    EXPECT_NEAR(attention_score(e, single, seven), 7.0, 1e-12);

    const std::vector<EmbeddingVector> same{vec({1, 1}), vec({1, -1})};
    const std::vector<double> four_eight{4.0, 8.0};
    EXPECT_NEAR(attention_score(e, same, four_eight), 6.0, 1e-12);

    const std::vector<EmbeddingVector> axes{vec({1, 0}), vec({0, 1})};
    const std::vector<double> ten_zero{10.0, 0.0};
    const double expected = 10.0 * std::exp(1.0) / (std::exp(1.0) + 1.0);
    EXPECT_NEAR(attention_score(e, axes, ten_zero), expected, 1e-12);
    EXPECT_NEAR(expected, 7.3106, 1e-4);
}

TEST(Scoring, Errors) {
    const auto e = vec({1, 0});
    EXPECT_EQ(code_of([&] { attention_score(e, {}, {}); }), ErrorCode::NoFeatures);
    const std::vector<EmbeddingVector> one{vec({1, 0})};
    const std::vector<double> two{1.0, 2.0};
    EXPECT_EQ(code_of([&] { attention_score(e, one, two); }), ErrorCode::LengthMismatch);
}

TEST(Scoring, PropertiesOnRandomInstances) {
    Rng rng(21);
    auto random_vec = [&](std::size_t d) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.uniform() * 2 - 1;
        return vec(std::move(v));
    };
    for (int round = 0; round < 500; ++round) {
        const std::size_t d = 2 + rng.below(16);
        const std::size_t n = 1 + rng.below(12);
        const auto e = random_vec(d);
        std::vector<EmbeddingVector> fs;
        std::vector<double> us;
        for (std::size_t i = 0; i < n; ++i) {
            fs.push_back(random_vec(d));
            us.push_back(static_cast<double>(rng.below(11)));
        }
        const auto w = attention_weights(e, fs);
        EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
        const double s = attention_score(e, fs, us);
        EXPECT_GE(s, *std::min_element(us.begin(), us.end()) - 1e-12);
        EXPECT_LE(s, *std::max_element(us.begin(), us.end()) + 1e-12);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span(perm));
        std::vector<EmbeddingVector> pf;
        std::vector<double> pu;
        for (auto i : perm) {
            pf.push_back(fs[i]);
            pu.push_back(us[i]);
        }
        EXPECT_NEAR(attention_score(e, pf, pu), s, 1e-12);
    }
}

TEST(Scoring, EvidenceTextScoreUsesEmbeddings) {
    HashingEmbedder emb(64);
    const std::vector<EvidenceFeature> features{{"raises the inr", 9.0, 0}, {"dry cough", 1.0, 0}};
    const double near = score_evidence("amiodarone raises the inr", features, emb);
    const double far = score_evidence("lisinopril causes a dry cough", features, emb);
    EXPECT_GT(near, far);
}

// --- end to end ----------------------------------------------------------------

class RetrieveFixture : public ::testing::Test {
protected:
    const FixtureWorld& w = FixtureWorld::get();
    Retriever retriever{w.graph(), *w.embedder};
    SearchCondition sc = SearchCondition::load("default");
};

TEST_F(RetrieveFixture, PlantedGoldIsRetrieved) {
    RetrievalConfig cfg;
    for (const auto& q : w.queries) {
        const auto r = retriever.retrieve(q.question, cfg, sc, *w.chat, 7);
        ASSERT_FALSE(r.empty()) << q.id << " " << r.empty_reason.value_or("");
        for (const auto& g : q.gold) {
            const auto id = evidence_by_text(w.graph(), g);
            ASSERT_TRUE(id) << g;
            const bool found = std::any_of(r.evidence.begin(), r.evidence.end(),
                                           [&](const ScoredEvidence& s) { return s.id == *id; });
            EXPECT_TRUE(found) << q.id << ": " << g;
        }
        EXPECT_TRUE(std::is_sorted(r.evidence.begin(), r.evidence.end(), [](const auto& a, const auto& b) {
            return a.score != b.score ? a.score > b.score : a.id < b.id;
        }));
        EXPECT_LE(r.evidence.size(), cfg.top_k);
    }
}

TEST_F(RetrieveFixture, SameSeedSameTrace) {
    RetrievalConfig cfg;
    const auto& q = w.queries[0].question;
    const auto a = retriever.retrieve(q, cfg, sc, *w.chat, 7).to_json(w.graph()).dump();
    const auto b = retriever.retrieve(q, cfg, sc, *w.chat, 7).to_json(w.graph()).dump();
    EXPECT_EQ(a, b);
}

TEST_F(RetrieveFixture, CosineModeIsABruteForceSortOfThePool) {
    RetrievalConfig cfg;
    cfg.ranking = RankingMode::Cosine;
    cfg.top_k = 1000;
    cfg.context_budget = 1000000;
    for (const auto& q : w.queries) {
        const auto r = retriever.retrieve(q.question, cfg, sc, *w.chat, 3);
        EXPECT_TRUE(r.features.empty());
        std::set<EvidenceId> pool;
        for (TopicId t : r.topics) {
            const auto& ids = w.graph().topic(t).evidence_ids;
            pool.insert(ids.begin(), ids.end());
        }
        const auto qv = w.embedder->embed(q.question);
        std::vector<std::pair<double, EvidenceId>> oracle;
        for (EvidenceId id : pool) oracle.emplace_back(brute_cosine(qv, w.embedder->embed(w.graph().evidence(id).description)), id);
        std::sort(oracle.begin(), oracle.end(),
                  [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
        ASSERT_EQ(r.evidence.size(), oracle.size()) << q.id;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            EXPECT_EQ(r.evidence[i].id, oracle[i].second);
            EXPECT_NEAR(r.evidence[i].score, oracle[i].first, 1e-12);
        }
    }
}

TEST_F(RetrieveFixture, NeighborModeRetainsTheOneHopTopics) {
    RetrievalConfig cfg;
    cfg.sampling = SamplingMode::Neighbor;
    cfg.n_t = 1000;
    for (const auto& q : w.queries) {
        const auto r = retriever.retrieve(q.question, cfg, sc, *w.chat, 3);
        std::map<TopicId, double> oracle;
        const std::set<EntityId> linked(r.linked.begin(), r.linked.end());
        for (const auto& [key, weight] : w.graph().weights()) {
            if (linked.contains(key.entity)) oracle[key.topic] += weight.value();
        }
        ASSERT_EQ(r.frequencies.size(), oracle.size()) << q.id;
        for (const auto& [t, v] : oracle) EXPECT_NEAR(r.frequencies.at(t), v, 1e-12);
    }
}

TEST_F(RetrieveFixture, BudgetDropsFromTheTail) {
    RetrievalConfig cfg;
    const auto& q = w.queries[0].question;
    const auto full = retriever.retrieve(q, cfg, sc, *w.chat, 7);
    ASSERT_GE(full.evidence.size(), 3u);
    cfg.context_budget = full.evidence[0].words + full.evidence[1].words;
    const auto cut = retriever.retrieve(q, cfg, sc, *w.chat, 7);
    ASSERT_EQ(cut.evidence.size(), 2u);
    EXPECT_EQ(cut.evidence[0].id, full.evidence[0].id);
    EXPECT_EQ(cut.evidence[1].id, full.evidence[1].id);
    EXPECT_EQ(cut.dropped_by_budget, full.evidence.size() - 2);
    EXPECT_EQ(cut.total_words, cfg.context_budget);
    const auto ctx = cut.context(w.graph());
    EXPECT_EQ(ctx, w.graph().evidence(cut.evidence[0].id).description + "\n" +
                       w.graph().evidence(cut.evidence[1].id).description + "\n");
}

TEST(RetrieveEmpty, ReportsWhyNothingCameBack) {
    const auto five = terms_reply({"alpha", "beta", "gamma", "delta", "epsilon"});
    HashingEmbedder emb(64);
    const auto sc = SearchCondition::load("default");
    RetrievalConfig cfg;

    Hypergraph empty;
    empty.freeze();
    ScriptedChatBackend c1;
    c1.push_reply(five);
    auto r = Retriever(empty, emb).retrieve("q", cfg, sc, c1, 1);
    EXPECT_EQ(r.empty_reason, "no_entities_linked");

    Hypergraph bare;
    bare.link_entity(bare.add_evidence(make_evidence("lonely")), "hermit", "drug");
    bare.freeze();
    ScriptedChatBackend c2;
    c2.push_reply(five);
    r = Retriever(bare, emb).retrieve("q", cfg, sc, c2, 1);
    EXPECT_EQ(r.empty_reason, "no_topics_visited");

    auto s = star_graph(9, 1, 10);
    ScriptedChatBackend c3;
    c3.push_reply(five);
    c3.push_reply(R"({"features":[]})");
    c3.push_reply(R"({"features":[]})");
    r = Retriever(s.graph, emb).retrieve("q", cfg, sc, c3, 1);
    EXPECT_EQ(r.empty_reason, "no_features");
    EXPECT_TRUE(r.evidence.empty());
    EXPECT_GT(r.candidates, 0u);
}

TEST(RetrieveEmpty, TraceCarriesTheReason) {
    Hypergraph empty;
    empty.freeze();
    HashingEmbedder emb(64);
    ScriptedChatBackend chat;
    chat.push_reply(terms_reply({"a", "b", "c", "d", "e"}));
    const auto r = Retriever(empty, emb).retrieve("q", {}, SearchCondition::load("default"), chat, 1);
    const auto j = r.to_json(empty);
    EXPECT_EQ(j.at("empty_reason"), "no_entities_linked");
    EXPECT_TRUE(j.at("evidence").empty());
}
