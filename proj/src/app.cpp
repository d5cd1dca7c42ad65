#include "hyperrag/app.hpp"

#include "hyperrag/backend/live.hpp"
#include "hyperrag/baseline.hpp"
#include "hyperrag/error.hpp"
#include "hyperrag/persistence.hpp"
#include "hyperrag/rng.hpp"
#include "hyperrag/text.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <ostream>

namespace hyperrag {

using nlohmann::json;
namespace fs = std::filesystem;

// --- config --------------------------------------------------------------------

namespace {

text::TokenizerMode tokenizer_from_name(const std::string& name) {
    if (name == "auto") return text::TokenizerMode::Auto;
    if (name == "whitespace") return text::TokenizerMode::Whitespace;
    if (name == "character") return text::TokenizerMode::Character;
    throw Error(ErrorCode::InvalidConfig, "unknown tokenizer: " + name);
}

std::string tokenizer_name(text::TokenizerMode m) {
    switch (m) {
    case text::TokenizerMode::Auto: return "auto";
    case text::TokenizerMode::Whitespace: return "whitespace";
    case text::TokenizerMode::Character: return "character";
    }
    return "auto";
}

IngestionConfig ingestion_from_json(const json& j) {
    IngestionConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "window") c.window = value.get<std::size_t>();
        else if (key == "overlap") c.overlap = value.get<std::size_t>();
        else if (key == "tokenizer") c.tokenizer = tokenizer_from_name(value.get<std::string>());
        else if (key == "normalization") c.normalization_path = value.get<std::string>();
        else if (key == "summary_batch") c.summary_batch = value.get<std::size_t>();
        else if (key == "max_in_flight") c.max_in_flight = value.get<std::size_t>();
        else throw Error(ErrorCode::InvalidConfig, "unknown ingestion setting: " + key);
    }
    c.validate();
    return c;
}

void resolve(std::string& path, const fs::path& base) {
    if (!path.empty() && fs::path(path).is_relative()) path = (base / path).lexically_normal().string();
}

} // namespace

AppConfig AppConfig::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    AppConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "corpus") c.corpus = value.get<std::string>();
            else if (key == "graph") c.graph = value.get<std::string>();
            else if (key == "index") c.index = value.get<std::string>();
            else if (key == "profile") c.profile = value.get<std::string>();
            else if (key == "profile_dir") c.profile_dir = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "log_level") c.log_level = value.get<std::string>();
            else if (key == "mock") c.mock = value.get<bool>();
            else if (key == "script") c.script = value.get<std::string>();
            else if (key == "synonyms") c.synonyms = value.get<std::string>();
            else if (key == "embedding_dims") c.embedding_dims = value.get<std::size_t>();
            else if (key == "chat") c.chat = value;
            else if (key == "embedding") c.embedding = value;
            else if (key == "judge") c.judge = value;
            else if (key == "key_env") c.key_env = value.get<std::string>();
            else if (key == "ingestion") c.ingestion = ingestion_from_json(value);
            else if (key == "retrieval") c.retrieval = RetrievalConfig::from_json(value);
            else throw Error(ErrorCode::InvalidConfig, "unknown config key: " + key);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
    }
    return c;
}

AppConfig AppConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    AppConfig c = from_json(j);
    const fs::path base = path.parent_path();
    for (std::string* p : {&c.corpus, &c.graph, &c.index, &c.script, &c.synonyms, &c.ingestion.normalization_path}) {
        resolve(*p, base);
    }
    if (j.contains("profile_dir")) resolve(c.profile_dir, base);
    return c;
}

json AppConfig::to_json() const {
    return {{"corpus", corpus},
            {"graph", graph},
            {"index", index},
            {"profile", profile},
            {"seed", seed},
            {"log_level", log_level},
            {"mock", mock},
            {"script", script},
            {"synonyms", synonyms},
            {"embedding_dims", embedding_dims},
            {"chat", chat},
            {"embedding", embedding},
            {"judge", judge},
            {"key_env", key_env},
            {"ingestion",
             {{"window", ingestion.window},
              {"overlap", ingestion.overlap},
              {"tokenizer", tokenizer_name(ingestion.tokenizer)},
              {"normalization", ingestion.normalization_path},
              {"summary_batch", ingestion.summary_batch},
              {"max_in_flight", ingestion.max_in_flight}}},
            {"retrieval", retrieval.to_json()}};
}

int exit_code_for(const Error& e) noexcept {
    switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyDataset:
    case ErrorCode::CorruptFile:
    case ErrorCode::VersionMismatch:
    case ErrorCode::UnknownTemplate:
        return 2;
    default:
        return 1;
    }
}

// --- backends --------------------------------------------------------------------

std::vector<ScriptedQuery> load_script(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read script " + path.string());
    std::vector<ScriptedQuery> out;
    try {
        const json j = json::parse(in);
        for (const auto& q : j.at("queries")) {
            ScriptedQuery sq;
            sq.question = q.at("question").get<std::string>();
            sq.terms = q.value("terms", std::vector<std::string>{});
            for (const auto& f : q.value("features", json::array())) {
                sq.features.push_back({f.at("text").get<std::string>(), f.at("usefulness").get<double>(),
                                       f.at("entity").get<std::string>(), f.at("label").get<std::string>()});
            }
            out.push_back(std::move(sq));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    return out;
}

MockLexicon lexicon_from_corpus(const std::vector<Document>& corpus) {
    MockLexicon lex;
    for (const auto& d : corpus) {
        lex.harvest(d.title);
        lex.harvest(d.abstract);
        lex.harvest(d.body);
    }
    return lex;
}

MockLexicon lexicon_from_graph(const Hypergraph& graph) {
    MockLexicon lex;
    for (const auto& [id, m] : graph.entities()) lex.add(m.name, m.type);
    return lex;
}

Backends make_backends(const AppConfig& cfg, MockLexicon lexicon) {
    Backends b;
    if (cfg.mock) {
        auto chat = std::make_unique<MockChatBackend>(std::move(lexicon), cfg.seed);
        if (!cfg.script.empty()) {
            for (auto& q : load_script(cfg.script)) chat->add_query(std::move(q));
        }
        b.chat = std::move(chat);
        auto synonyms = cfg.synonyms.empty() ? std::unordered_map<std::string, std::string>{}
                                             : HashingEmbedder::load_synonyms(cfg.synonyms);
        b.embedder = std::make_unique<HashingEmbedder>(cfg.embedding_dims, 0x5eed, std::move(synonyms));
        b.judge = std::make_unique<MockJudge>();
        return b;
    }
    b.chat = std::make_unique<LiveChatBackend>(EndpointConfig::from_json(cfg.chat, cfg.key_env));
    b.embedder = std::make_unique<LiveEmbeddingBackend>(EndpointConfig::from_json(cfg.embedding, cfg.key_env),
                                                        cfg.embedding_dims);
    ChatBackend* judge_chat = b.chat.get();
    if (!cfg.judge.empty()) {
        b.judge_chat = std::make_unique<LiveChatBackend>(EndpointConfig::from_json(cfg.judge, cfg.key_env));
        judge_chat = b.judge_chat.get();
    }
    b.judge = std::make_unique<LlmJudge>(*judge_chat);
    const auto limiter = std::make_shared<InFlightLimiter>(cfg.ingestion.max_in_flight);
    b.chat->set_limiter(limiter);
    return b;
}

std::string generate_answer(ChatBackend& chat, const Sample& sample, const std::string& context) {
    ChatRequest req{TemplateId::AnswerGeneration,
                    {{"evidence", context}, {"question", sample.question}, {"options", format_options(sample)}}};
    return text::trim(chat.chat(req).text);
}

std::uint64_t query_seed(std::uint64_t seed, std::string_view key) noexcept {
    return derive_seed(seed, text::fnv1a(key));
}

// --- commands ----------------------------------------------------------------------

namespace {

void require_path(const std::string& path, const char* what) {
    if (path.empty()) throw Error(ErrorCode::InvalidConfig, std::string("no ") + what + " path given");
    if (!fs::exists(path)) throw Error(ErrorCode::InvalidConfig, std::string(what) + " not found: " + path);
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << j.dump(2) << '\n';
}

Hypergraph open_graph(const AppConfig& cfg) {
    require_path(cfg.graph, "graph");
    Hypergraph g = load_graph(cfg.graph);
    if (const auto v = g.audit(); !v.empty()) {
        spdlog::warn("loaded graph has {} audit violation(s)", v.size());
    }
    g.freeze();
    return g;
}

std::vector<Document> strip_documents(std::vector<Document> docs) {
    for (auto& d : docs) {
        d.title = MockChatBackend::strip_markup(d.title);
        d.abstract = MockChatBackend::strip_markup(d.abstract);
        d.body = MockChatBackend::strip_markup(d.body);
    }
    return docs;
}

ChunkIndex open_index(const AppConfig& cfg, EmbeddingBackend& embedder) {
    if (!cfg.index.empty()) {
        require_path(cfg.index, "index");
        return load_index(cfg.index);
    }
    require_path(cfg.corpus, "corpus");
    auto docs = load_corpus(cfg.corpus);
    // Markup is an annotation for the mock chat model, not document text.
    if (cfg.mock) docs = strip_documents(std::move(docs));
    return index_corpus(docs, cfg.ingestion, embedder);
}

} // namespace

BuildOutcome cmd_build(const AppConfig& cfg, const std::string& out_path, const std::string& report_path,
                       std::ostream& out) {
    require_path(cfg.corpus, "corpus");
    if (out_path.empty()) throw Error(ErrorCode::InvalidConfig, "no output graph path given");
    auto docs = load_corpus(cfg.corpus);
    Backends b = make_backends(cfg, cfg.mock ? lexicon_from_corpus(docs) : MockLexicon{});
    BuildResult built = build_graph(std::move(docs), cfg.ingestion, *b.chat);

    BuildOutcome outcome{std::move(built.report), false};
    outcome.audit_clean = outcome.report.violations.empty();
    if (outcome.audit_clean) save_graph(built.graph, out_path);

    const auto& r = outcome.report;
    out << "entities " << r.entities << "\ntopics " << r.topics << "\nevidence " << r.evidence << "\nedges "
        << r.edges << "\ndocuments " << r.documents_processed << "/" << r.documents_total << "\n";
    for (const auto& [stage, u] : r.stage_usage) {
        out << "tokens." << stage << " " << u.prompt_tokens << "+" << u.completion_tokens << "\n";
    }
    out << "tokens.total " << r.usage.total_tokens() << "\n";
    out << "audit " << (outcome.audit_clean ? "clean" : std::to_string(r.violations.size()) + " violation(s)") << "\n";

    if (!report_path.empty()) {
        json j = r.to_json();
        j["config"] = cfg.to_json();
        j["seed"] = cfg.seed;
        j["graph"] = out_path;
        write_json(j, report_path);
    }
    return outcome;
}

void cmd_index(const AppConfig& cfg, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) throw Error(ErrorCode::InvalidConfig, "no output index path given");
    Backends b = make_backends(cfg, {});
    AppConfig from_corpus = cfg;
    from_corpus.index.clear();
    const ChunkIndex index = open_index(from_corpus, *b.embedder);
    save_index(index, out_path);
    out << "chunks " << index.records.size() << "\ndimensions " << index.dimensions << "\n";
}

void cmd_query(const AppConfig& cfg, const std::string& query, bool as_json, std::ostream& out) {
    const Hypergraph graph = open_graph(cfg);
    Backends b = make_backends(cfg, lexicon_from_graph(graph));
    const SearchCondition sc = SearchCondition::load(cfg.profile, cfg.profile_dir);
    const Retriever retriever(graph, *b.embedder);
    const RetrievalResult r = retriever.retrieve(query, cfg.retrieval, sc, *b.chat, cfg.seed);

    if (as_json) {
        json j = {{"config", cfg.to_json()},
                  {"seed", cfg.seed},
                  {"search_condition", {{"name", sc.name}, {"rules", sc.rules}}},
                  {"result", r.to_json(graph)}};
        out << j.dump(2) << "\n";
        return;
    }
    if (r.empty()) {
        out << "no evidence: " << r.empty_reason.value_or("empty") << "\n";
        return;
    }
    std::size_t rank = 0;
    for (const auto& e : r.evidence) {
        const Evidence& ev = graph.evidence(e.id);
        out << ++rank << ". [" << std::fixed << std::setprecision(4) << e.score << "] " << to_string(e.id) << " ("
            << ev.provenance.document_id << "#" << ev.provenance.chunk_index << ", " << ev.label << ") "
            << ev.description << "\n";
    }
    out << "seed " << cfg.seed << ", profile " << sc.name << ", " << r.total_words << " words\n";
}

json cmd_eval(const AppConfig& cfg, const std::string& dataset_path, const std::string& mode,
              const std::string& baseline, const std::string& report_path, std::ostream& out) {
    static const std::set<std::string> modes{"keypoint", "compare", "accuracy", "f1"};
    if (!modes.contains(mode)) throw Error(ErrorCode::InvalidConfig, "unknown eval mode: " + mode);
    if (!baseline.empty() && baseline != "vector") {
        throw Error(ErrorCode::InvalidConfig, "unknown baseline: " + baseline);
    }
    if (mode == "compare" && baseline.empty()) throw Error(ErrorCode::InvalidConfig, "compare mode needs a baseline");
    require_path(dataset_path, "dataset");
    const auto dataset = load_dataset(dataset_path);

    const Hypergraph graph = open_graph(cfg);
    Backends b = make_backends(cfg, lexicon_from_graph(graph));
    const SearchCondition sc = SearchCondition::load(cfg.profile, cfg.profile_dir);
    const Retriever retriever(graph, *b.embedder);
    CachingJudge judge(*b.judge);

    ContextFn idep = [&](const Sample& s) {
        return retriever.retrieve(s.question, cfg.retrieval, sc, *b.chat, query_seed(cfg.seed, s.id)).context(graph);
    };
    std::optional<ChunkIndex> index;
    ContextFn vector;
    if (!baseline.empty()) {
        index = open_index(cfg, *b.embedder);
        vector = [&](const Sample& s) {
            return query_topk(s.question, *index, *b.embedder, cfg.retrieval.top_k, cfg.retrieval.context_budget)
                .context(*index);
        };
    }

    json report = {{"mode", mode},
                   {"dataset", dataset_path},
                   {"samples", dataset.size()},
                   {"seed", cfg.seed},
                   {"judge_model", judge.model_name()},
                   {"search_condition", sc.name},
                   {"config", cfg.to_json()}};
    const std::size_t workers = cfg.retrieval.max_in_flight;

    auto answers = [&](const ContextFn& ctx) {
        return [&, ctx](const Sample& s) { return generate_answer(*b.chat, s, ctx(s)); };
    };
    auto classify = [&](const ContextFn& ctx) {
        std::vector<std::string> predictions, gold;
        json rows = json::array();
        for (const auto& s : dataset) {
            if (!s.gold_answer) continue;
            const std::string answer = generate_answer(*b.chat, s, ctx(s));
            std::string pred = parse_choice(answer, s);
            if (mode == "f1" && s.options.empty()) pred = text::words(pred).empty() ? pred : text::words(pred).front();
            rows.push_back({{"id", s.id}, {"prediction", pred}, {"gold", *s.gold_answer}});
            predictions.push_back(std::move(pred));
            gold.push_back(*s.gold_answer);
        }
        json j = accuracy_and_f1(predictions, gold).to_json();
        j["rows"] = rows;
        return j;
    };

    if (mode == "compare") {
        const CompareReport cr = compare_retrievers(dataset, idep, vector, judge, {cfg.seed, workers});
        report["results"] = cr.to_json();
        out << "recall " << cr.tally.recall.win << "/" << cr.tally.recall.tie << "/" << cr.tally.recall.loss
            << " precision " << cr.tally.precision.win << "/" << cr.tally.precision.tie << "/"
            << cr.tally.precision.loss << " advantage "
            << (cr.advantage ? std::to_string(cr.advantage->a * 100.0) : std::string("undefined")) << " excluded "
            << cr.excluded.size() << "\n";
    } else if (mode == "keypoint") {
        const KeypointReport kr = evaluate_keypoints(dataset, answers(idep), judge, workers);
        report["results"] = kr.to_json();
        out << "keypoint " << kr.satisfied << "/" << kr.total << " = " << kr.score << " excluded "
            << kr.excluded.size() << "\n";
        if (vector) {
            const KeypointReport vr = evaluate_keypoints(dataset, answers(vector), judge, workers);
            report["baseline"] = vr.to_json();
            out << "baseline keypoint " << vr.satisfied << "/" << vr.total << " = " << vr.score << "\n";
        }
    } else {
        const json m = classify(idep);
        report["results"] = m;
        const char* key = mode == "accuracy" ? "accuracy" : "f1";
        out << mode << " " << m[key].get<double>() << " over " << m["n"].get<std::size_t>() << " samples\n";
        if (vector) {
            const json vm = classify(vector);
            report["baseline"] = vm;
            out << "baseline " << mode << " " << vm[key].get<double>() << "\n";
        }
    }
    if (!report_path.empty()) write_json(report, report_path);
    return report;
}

bool cmd_inspect(const AppConfig& cfg, bool as_json, std::ostream& out) {
    require_path(cfg.graph, "graph");
    const Hypergraph g = load_graph(cfg.graph);
    const auto violations = g.audit();
    if (as_json) {
        json v = json::array();
        for (const auto& x : violations) {
            v.push_back({{"kind", std::string(to_string(x.kind))}, {"record", x.record}, {"message", x.message}});
        }
        out << json{{"entities", g.entities().size()},
                    {"topics", g.topics().size()},
                    {"evidence", g.evidence().size()},
                    {"edges", g.weights().size()},
                    {"violations", v}}
                   .dump(2)
            << "\n";
    } else {
        out << "entities " << g.entities().size() << "\ntopics " << g.topics().size() << "\nevidence "
            << g.evidence().size() << "\nedges " << g.weights().size() << "\n";
        for (const auto& x : violations) out << "violation " << to_string(x.kind) << " " << x.record << ": " << x.message << "\n";
        out << "audit " << (violations.empty() ? "clean" : "failed") << "\n";
    }
    return violations.empty();
}

} // namespace hyperrag
