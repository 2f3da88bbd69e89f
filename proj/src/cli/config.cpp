#include <nlohmann/json.hpp>

#include <set>

#include "scbm/cli.hpp"
#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm::cli {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!keys.contains(k)) {
            throw ConfigError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
        }
    }
}

template <typename T>
std::optional<T> get(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: '" + (where.empty() ? std::string(key) : where + "." + key) +
                          "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_exists(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw ConfigError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
}

}  // namespace

fs::path RunConfig::cache_path() const { return cache.value_or(output_dir / "score-cache.bin"); }

fs::path RunConfig::vectors_path() const {
    return vectors.value_or(output_dir / ("vectors." + to_string(train.persona_mode) + ".tsv"));
}

fs::path RunConfig::checkpoint_path() const { return checkpoint.value_or(output_dir / "checkpoint.json"); }

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir, const Overrides& overrides) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(doc, "", {"seed", "task", "model", "persona_mode", "paths", "backend", "train", "explain", "evaluate"});

    RunConfig cfg;
    const auto seed = overrides.seed ? overrides.seed : get<std::uint64_t>(doc, "seed", "");
    if (!seed) throw ConfigError("config: 'seed' is mandatory");
    cfg.seed = *seed;

    const Task task = parse_task(overrides.task.value_or(get<std::string>(doc, "task", "").value_or("1.1")));
    const ModelKind kind = parse_model_kind(overrides.model.value_or(get<std::string>(doc, "model", "").value_or("scbm")));
    cfg.train = TrainConfig::defaults(kind, task);
    cfg.train.seed = cfg.seed;
    cfg.train.persona_mode =
        parse_persona_mode(overrides.persona_mode.value_or(get<std::string>(doc, "persona_mode", "").value_or("none")));

    // paths
    const json paths = doc.value("paths", json::object());
    reject_unknown(paths, "paths",
                   {"dataset", "splits", "lexicon", "field_mapping", "embeddings", "cache", "vectors", "checkpoint",
                    "output_dir"});
    const auto dataset = get<std::string>(paths, "dataset", "paths");
    const auto splits = get<std::string>(paths, "splits", "paths");
    if (!dataset) throw ConfigError("config: 'paths.dataset' is required");
    if (!splits) throw ConfigError("config: 'paths.splits' is required");
    cfg.dataset = resolve(base_dir, *dataset);
    cfg.splits = resolve(base_dir, *splits);
    require_exists(cfg.dataset, "dataset");
    require_exists(cfg.splits, "splits manifest");
    if (const auto lex = get<std::string>(paths, "lexicon", "paths"); lex && *lex != kDefaultLexiconTag) {
        const fs::path p = resolve(base_dir, *lex);
        require_exists(p, "lexicon");
        cfg.lexicon = p.string();
    }
    if (const auto fm = get<std::string>(paths, "field_mapping", "paths")) {
        cfg.field_mapping = resolve(base_dir, *fm);
        require_exists(*cfg.field_mapping, "field mapping");
    }
    if (const auto e = get<std::string>(paths, "embeddings", "paths")) {
        cfg.embeddings = resolve(base_dir, *e);
        require_exists(*cfg.embeddings, "embeddings");
    }
    if (const auto c = get<std::string>(paths, "cache", "paths")) cfg.cache = resolve(base_dir, *c);
    if (const auto v = get<std::string>(paths, "vectors", "paths")) cfg.vectors = resolve(base_dir, *v);
    if (const auto c = get<std::string>(paths, "checkpoint", "paths")) cfg.checkpoint = resolve(base_dir, *c);
    cfg.output_dir = resolve(base_dir, get<std::string>(paths, "output_dir", "paths").value_or("out"));

    // backend
    const json backend = doc.value("backend", json::object());
    reject_unknown(backend, "backend",
                   {"kind", "base_url", "model_id", "api", "token_env", "top_k", "max_in_flight", "timeout_seconds",
                    "retry"});
    auto& b = cfg.backend;
    b.kind = get<std::string>(backend, "kind", "backend").value_or("mock");
    if (b.kind != "mock" && b.kind != "http") throw ConfigError("config: backend.kind must be 'mock' or 'http'");
    b.base_url = get<std::string>(backend, "base_url", "backend").value_or("");
    b.model_id = get<std::string>(backend, "model_id", "backend").value_or("");
    if (const auto api = get<std::string>(backend, "api", "backend")) b.api = parse_completion_api(*api);
    b.token_env = get<std::string>(backend, "token_env", "backend").value_or(b.token_env);
    b.top_k = get<int>(backend, "top_k", "backend").value_or(b.top_k);
    b.max_in_flight = get<int>(backend, "max_in_flight", "backend").value_or(b.max_in_flight);
    b.timeout_seconds = get<int>(backend, "timeout_seconds", "backend").value_or(b.timeout_seconds);
    if (b.top_k <= 0 || b.max_in_flight <= 0 || b.timeout_seconds <= 0) {
        throw ConfigError("config: backend.top_k, max_in_flight and timeout_seconds must be positive");
    }
    if (b.kind == "http" && (b.base_url.empty() || b.model_id.empty())) {
        throw ConfigError("config: http backend needs backend.base_url and backend.model_id");
    }
    if (backend.contains("retry")) {
        const json& r = backend["retry"];
        reject_unknown(r, "backend.retry", {"max_attempts", "initial_backoff_ms", "multiplier"});
        b.retry.max_attempts = get<int>(r, "max_attempts", "backend.retry").value_or(b.retry.max_attempts);
        b.retry.initial_backoff = std::chrono::milliseconds(
            get<long long>(r, "initial_backoff_ms", "backend.retry").value_or(b.retry.initial_backoff.count()));
        b.retry.multiplier = get<double>(r, "multiplier", "backend.retry").value_or(b.retry.multiplier);
        if (b.retry.max_attempts <= 0 || b.retry.initial_backoff.count() < 0 || b.retry.multiplier < 1.0) {
            throw ConfigError("config: invalid backend.retry settings");
        }
    }

    // train
    const json train = doc.value("train", json::object());
    reject_unknown(train, "train",
                   {"learning_rate", "epochs", "batch_size", "patience", "hidden", "undersample",
                    "multilabel_threshold"});
    auto& t = cfg.train;
    t.learning_rate = get<double>(train, "learning_rate", "train").value_or(t.learning_rate);
    t.epochs = get<int>(train, "epochs", "train").value_or(t.epochs);
    t.batch_size = get<int>(train, "batch_size", "train").value_or(t.batch_size);
    t.patience = get<int>(train, "patience", "train").value_or(t.patience);
    if (const auto h = get<std::vector<Eigen::Index>>(train, "hidden", "train")) t.shape.hidden = *h;
    t.undersample_class = get<std::string>(train, "undersample", "train");
    t.multilabel_threshold = get<double>(train, "multilabel_threshold", "train").value_or(t.multilabel_threshold);
    t.validate();

    // explain
    const json explain = doc.value("explain", json::object());
    reject_unknown(explain, "explain",
                   {"k", "format", "include_negative", "concept_branch", "split", "instances", "local_split"});
    auto& x = cfg.explain;
    x.k = get<std::size_t>(explain, "k", "explain").value_or(x.k);
    if (x.k == 0) throw ConfigError("config: explain.k must be positive");
    if (const auto f = get<std::string>(explain, "format", "explain")) x.format = parse_report_format(*f);
    x.include_negative = get<bool>(explain, "include_negative", "explain").value_or(false);
    x.concept_branch = get<bool>(explain, "concept_branch", "explain").value_or(false);
    x.split = get<std::string>(explain, "split", "explain").value_or(x.split);
    x.instances = get<std::vector<std::string>>(explain, "instances", "explain").value_or(x.instances);
    x.local_split = get<std::string>(explain, "local_split", "explain").value_or(x.local_split);

    // evaluate
    const json evaluate = doc.value("evaluate", json::object());
    reject_unknown(evaluate, "evaluate", {"split"});
    cfg.eval_split = get<std::string>(evaluate, "split", "evaluate").value_or(cfg.eval_split);

    if (overrides.split) {
        cfg.eval_split = *overrides.split;
        cfg.explain.local_split = *overrides.split;
    }
    if (kind == ModelKind::scbmt && !cfg.embeddings) {
        throw ConfigError("config: model 'scbmt' needs paths.embeddings");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
    const fs::path absolute = fs::absolute(path);
    RunConfig cfg = parse_run_config(text::read_file(absolute.string()), absolute.parent_path(), overrides);
    cfg.config_path = absolute;
    return cfg;
}

std::string config_echo_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["task"] = task_id(c.train.task);
    j["model"] = to_string(c.train.kind);
    j["persona_mode"] = to_string(c.train.persona_mode);
    j["paths"] = {{"dataset", c.dataset.string()},
                  {"splits", c.splits.string()},
                  {"lexicon", c.lexicon},
                  {"field_mapping", c.field_mapping ? c.field_mapping->string() : ""},
                  {"embeddings", c.embeddings ? c.embeddings->string() : ""},
                  {"cache", c.cache_path().string()},
                  {"vectors", c.vectors_path().string()},
                  {"checkpoint", c.checkpoint_path().string()},
                  {"output_dir", c.output_dir.string()}};
    j["backend"] = {{"kind", c.backend.kind},
                    {"base_url", c.backend.base_url},
                    {"model_id", c.backend.model_id},
                    {"api", c.backend.api == CompletionApi::chat ? "chat" : "completions"},
                    {"token_env", c.backend.token_env},
                    {"top_k", c.backend.top_k},
                    {"max_in_flight", c.backend.max_in_flight}};
    j["train"] = {{"optimizer", "rmsprop"},
                  {"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"patience", c.train.patience},
                  {"hidden", c.train.shape.hidden},
                  {"undersample", c.train.undersample_class ? *c.train.undersample_class : ""},
                  {"multilabel_threshold", c.train.multilabel_threshold}};
    return j.dump(2);
}

}  // namespace scbm::cli
