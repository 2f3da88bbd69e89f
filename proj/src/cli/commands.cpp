#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "scbm/cache.hpp"
#include "scbm/cli.hpp"
#include "scbm/error.hpp"
#include "scbm/metrics.hpp"
#include "scbm/synthetic.hpp"
#include "scbm/text.hpp"

namespace scbm::cli {
namespace {

struct Data {
    std::vector<AnnotatedPost> posts;
    SplitManifest splits;
    ConceptLexicon lexicon;
};

Data load_data(const RunConfig& cfg) {
    Data d;
    const FieldMapping mapping = cfg.field_mapping
                                     ? FieldMapping::from_json_text(text::read_file(cfg.field_mapping->string()))
                                     : FieldMapping::exist2025();
    d.posts = ingest_dataset(cfg.dataset.string(), mapping);
    d.splits = load_splits(cfg.splits.string());
    d.lexicon = load_lexicon(cfg.lexicon);
    return d;
}

VectorTable load_vector_table(const RunConfig& cfg) {
    const fs::path p = cfg.vectors_path();
    if (!fs::exists(p)) {
        throw ConfigError("concept vectors '" + p.string() + "' not found; run 'scbm score' first");
    }
    return load_vectors(p.string());
}

std::optional<EmbeddingTable> load_embedding_table(const RunConfig& cfg) {
    if (!cfg.embeddings) return std::nullopt;
    return load_embeddings(cfg.embeddings->string());
}

Checkpoint load_checkpoint_for(const RunConfig& cfg) {
    const fs::path p = cfg.checkpoint_path();
    if (!fs::exists(p)) throw ConfigError("checkpoint '" + p.string() + "' not found; run 'scbm train' first");
    Checkpoint ck = load_checkpoint(p.string());
    if (task_of(ck.head) != cfg.train.task) {
        throw ConfigError("checkpoint was trained for task " + task_id(task_of(ck.head)) + ", config asks for " +
                          task_id(cfg.train.task));
    }
    return ck;
}

const std::vector<std::string>& split_ids(const SplitManifest& splits, const std::string& name) {
    const auto it = splits.find(name);
    if (it == splits.end()) throw ConfigError("split '" + name + "' is not in the split manifest");
    return it->second;
}

// Ids of `split`, or every post for "all".
std::vector<std::string> select_ids(const Data& d, const std::string& split) {
    if (split == "all") {
        std::vector<std::string> ids;
        for (const auto& p : d.posts) ids.push_back(p.id);
        return ids;
    }
    return split_ids(d.splits, split);
}

std::string file_hash(const fs::path& p) { return text::sha256_hex(text::read_file(p.string())); }

void write_output(CommandResult& r, const fs::path& path, std::string_view contents) {
    fs::create_directories(path.parent_path());
    text::write_file(path.string(), contents);
    r.outputs.push_back(path);
}

std::string extension(ReportFormat f) {
    switch (f) {
        case ReportFormat::csv: return ".csv";
        case ReportFormat::markdown: return ".md";
        case ReportFormat::text: return ".txt";
    }
    return ".txt";
}

std::map<std::string, const AnnotatedPost*> index_posts(const std::vector<AnnotatedPost>& posts) {
    std::map<std::string, const AnnotatedPost*> out;
    for (const auto& p : posts) out.emplace(p.id, &p);
    return out;
}

}  // namespace

std::unique_ptr<ScoringBackend> make_backend(const BackendSettings& s) {
    if (s.kind == "mock") {
        return s.model_id.empty() ? std::make_unique<MockBackend>() : std::make_unique<MockBackend>(s.model_id);
    }
    HttpBackendConfig hc;
    hc.base_url = s.base_url;
    hc.model_id = s.model_id;
    hc.api = s.api;
    hc.timeout = std::chrono::seconds(s.timeout_seconds);
    if (const char* token = std::getenv(s.token_env.c_str())) hc.auth_token = token;
    return std::make_unique<HttpBackend>(hc);
}

CommandResult cmd_score(const RunConfig& cfg, ScoringBackend* backend) {
    const Data d = load_data(cfg);
    std::unique_ptr<ScoringBackend> owned;
    if (backend == nullptr) {
        owned = make_backend(cfg.backend);
        backend = owned.get();
    }
    fs::create_directories(cfg.cache_path().parent_path());
    ScoreCache cache(cfg.cache_path().string());

    ScoringOptions options;
    options.top_k = cfg.backend.top_k;
    options.max_in_flight = cfg.backend.max_in_flight;
    options.retry = cfg.backend.retry;
    ScoringStats stats;
    const auto vectors = score_corpus(d.posts, d.lexicon, cfg.train.persona_mode, *backend, cache, options, &stats);

    CommandResult r;
    write_output(r, cfg.vectors_path(), export_vectors(vectors, d.lexicon));
    r.summary = "scored " + std::to_string(vectors.size()) + " rows x " + std::to_string(d.lexicon.size()) +
                " concepts (lexicon " + d.lexicon.version() + ", persona mode " + to_string(cfg.train.persona_mode) +
                "): " + std::to_string(stats.prompts) + " prompts, " + std::to_string(stats.cache_hits) +
                " cache hits, " + std::to_string(stats.backend_requests) + " backend calls";
    if (stats.clamped > 0) r.summary += ", " + std::to_string(stats.clamped) + " clamped scores";
    return r;
}

CommandResult cmd_train(const RunConfig& cfg) {
    const Data d = load_data(cfg);
    const VectorTable vectors = load_vector_table(cfg);
    const auto embeddings = load_embedding_table(cfg);
    if (cfg.train.kind == ModelKind::scbmt && !embeddings) throw ConfigError("model 'scbmt' needs paths.embeddings");

    const TrainResult result =
        train(cfg.train, d.posts, vectors, d.lexicon, embeddings ? &*embeddings : nullptr, d.splits);

    CommandResult r;
    const std::string serialized = serialize_checkpoint(result.checkpoint);
    write_output(r, cfg.checkpoint_path(), serialized);

    std::string history = "epoch,train_loss,dev_macro_f1\n";
    for (const auto& e : result.history) {
        history += std::to_string(e.epoch) + "," + text::format_double(e.train_loss) + "," +
                   text::format_double(e.dev_macro_f1) + "\n";
    }
    write_output(r, cfg.output_dir / "history.csv", history);

    nlohmann::ordered_json manifest;
    manifest["command"] = "train";
    manifest["config"] = nlohmann::ordered_json::parse(config_echo_json(cfg));
    manifest["data"] = {{"dataset_sha256", file_hash(cfg.dataset)},
                        {"splits_sha256", file_hash(cfg.splits)},
                        {"vectors_sha256", file_hash(cfg.vectors_path())},
                        {"embeddings_sha256", cfg.embeddings ? file_hash(*cfg.embeddings) : ""},
                        {"lexicon_version", d.lexicon.version()},
                        {"lexicon_size", d.lexicon.size()}};
    manifest["checkpoint"] = {{"path", cfg.checkpoint_path().string()},
                              {"sha256", text::sha256_hex(serialized)}};
    manifest["result"] = {{"best_epoch", result.best_epoch},
                          {"best_dev_macro_f1", result.best_dev_macro_f1},
                          {"epochs_run", result.history.size()},
                          {"train_posts", result.train_posts},
                          {"train_rows", result.train_rows},
                          {"dev_posts", result.dev_posts},
                          {"undersample_warning", result.undersample_warning.value_or("")}};
    auto hist = nlohmann::ordered_json::array();
    for (const auto& e : result.history) {
        hist.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_macro_f1", e.dev_macro_f1}});
    }
    manifest["history"] = std::move(hist);
    write_output(r, cfg.output_dir / "run_manifest.json", manifest.dump(2) + "\n");

    r.summary = "trained " + to_string(cfg.train.kind) + " for task " + task_id(cfg.train.task) + ": best dev macro-F1 " +
                text::format_double(result.best_dev_macro_f1) + " at epoch " + std::to_string(result.best_epoch) +
                " of " + std::to_string(result.history.size()) + " (lr " + text::format_double(cfg.train.learning_rate) +
                ", max epochs " + std::to_string(cfg.train.epochs) + ")";
    return r;
}

CommandResult cmd_predict(const RunConfig& cfg) {
    const Data d = load_data(cfg);
    const Checkpoint ck = load_checkpoint_for(cfg);
    const VectorTable vectors = load_vector_table(cfg);
    const auto embeddings = load_embedding_table(cfg);
    const auto preds = infer_corpus(ck, d.posts, select_ids(d, cfg.eval_split), vectors,
                                    embeddings ? &*embeddings : nullptr, cfg.train.persona_mode);
    std::vector<SubmissionRecord> records;
    for (const auto& p : preds) records.push_back({p.id, p.label, p.probabilities});

    CommandResult r;
    const Task task = cfg.train.task;
    write_output(r, cfg.output_dir / "predictions.json", submission_json(records, task, false));
    write_output(r, cfg.output_dir / "predictions_soft.json", submission_json(records, task, true));
    r.summary = "predicted " + std::to_string(preds.size()) + " posts of split '" + cfg.eval_split + "'";
    return r;
}

CommandResult cmd_evaluate(const RunConfig& cfg) {
    const Data d = load_data(cfg);
    const Checkpoint ck = load_checkpoint_for(cfg);
    const VectorTable vectors = load_vector_table(cfg);
    const auto embeddings = load_embedding_table(cfg);
    const Task task = cfg.train.task;
    const auto preds = infer_corpus(ck, d.posts, select_ids(d, cfg.eval_split), vectors,
                                    embeddings ? &*embeddings : nullptr, cfg.train.persona_mode);
    const auto by_id = index_posts(d.posts);

    std::map<std::string, std::vector<EvalInstance>> groups;
    for (const auto& p : preds) {
        const AnnotatedPost& post = *by_id.at(p.id);
        if (!post.has_labels(task)) throw DatasetError("post '" + p.id + "' has no gold labels", {p.id});
        EvalInstance inst{p.label, p.probabilities, derive_targets(post, task)};
        groups["ALL"].push_back(inst);
        groups[lang_code(post.lang)].push_back(std::move(inst));
    }
    std::map<std::string, EvalResult> results;
    for (const auto& [name, instances] : groups) results[name] = evaluate(task, instances);

    CommandResult r;
    write_output(r, cfg.output_dir / "metrics.json", metrics_report_json(results));
    const EvalResult& all = results.at("ALL");
    r.summary = "evaluated " + std::to_string(all.n) + " posts of split '" + cfg.eval_split + "': macro-F1 " +
                text::format_double(all.macro_f1) + ", cross-entropy " + text::format_double(all.cross_entropy);
    return r;
}

CommandResult cmd_explain(const RunConfig& cfg, bool global) {
    const Data d = load_data(cfg);
    const Checkpoint ck = load_checkpoint_for(cfg);
    const VectorTable vectors = load_vector_table(cfg);
    const auto by_id = index_posts(d.posts);
    const Task task = cfg.train.task;
    const auto& x = cfg.explain;

    std::map<std::string, std::vector<const ConceptVector*>> rows_by_post;
    for (const auto& row : vectors.rows) rows_by_post[row.instance_id].push_back(&row);
    const auto rows_of = [&](const std::string& id) -> const std::vector<const ConceptVector*>& {
        const auto it = rows_by_post.find(id);
        if (it == rows_by_post.end() || !by_id.contains(id)) {
            throw JoinError("post '" + id + "' has no data or concept vectors", {id});
        }
        return it->second;
    };

    CommandResult r;
    if (global) {
        std::map<std::string, std::pair<std::vector<ConceptVector>, std::vector<HardLabel>>> by_lang;
        for (const auto& id : select_ids(d, x.split)) {
            const AnnotatedPost& post = *by_id.at(id);
            const HardLabel gold = derive_targets(post, task).hard;
            for (const auto* row : rows_of(id)) {
                auto& [vs, gs] = by_lang[lang_code(post.lang)];
                vs.push_back(*row);
                gs.push_back(gold);
            }
        }
        std::vector<GlobalExplanation> all;
        std::vector<std::string> omitted;
        for (const auto& [lang, data] : by_lang) {
            GlobalResult g = explain_global(ck, data.first, data.second, x.include_negative, lang);
            for (auto& e : g.classes) all.push_back(std::move(e));
            for (const auto& o : g.omitted) omitted.push_back(lang + "/" + o);
        }
        write_output(r, cfg.output_dir / ("explanations_global" + extension(x.format)), render_report(all, x.format, x.k));
        r.summary = "global explanations: " + std::to_string(all.size()) + " class rows";
        if (!omitted.empty()) {
            r.summary += "; no correctly classified instances for";
            for (const auto& o : omitted) r.summary += " " + o;
        }
        return r;
    }

    const auto ids = x.instances.empty() ? select_ids(d, x.local_split) : x.instances;
    const auto embeddings = load_embedding_table(cfg);
    std::vector<LocalExplanation> locals;
    for (const auto& id : ids) {
        const AnnotatedPost& post = *by_id.at(rows_of(id).front()->instance_id);
        std::optional<Vector> emb;
        if (kind_of(ck.head) == ModelKind::scbmt && embeddings) {
            const auto it = embeddings->vectors.find(id);
            if (it == embeddings->vectors.end()) throw JoinError("post '" + id + "' has no embedding", {id});
            emb = it->second;
        }
        for (const auto* row : rows_of(id)) {
            LocalExplanation e = explain_instance(ck, *row, std::min(x.k, ck.lexicon.size()), x.concept_branch,
                                                  emb ? &*emb : nullptr);
            if (row->persona_id) e.instance_id += "/" + *row->persona_id;
            e.lang = lang_code(post.lang);
            e.text = post.text;
            locals.push_back(std::move(e));
        }
    }
    write_output(r, cfg.output_dir / ("explanations_local" + extension(x.format)), render_report(locals, x.format, x.k));
    r.summary = "local explanations: " + std::to_string(locals.size()) + " rows";
    return r;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Concept-bottleneck sexism classifier: score, train, predict, explain, evaluate"};
    app.require_subcommand(1);
    std::string config_path;
    Overrides ov;
    std::uint64_t seed = 0;
    std::string persona_mode, task, model, split;
    bool verbose = false;
    bool global = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
        sub->add_option("--seed", seed, "Override the seed");
        sub->add_option("--persona-mode", persona_mode, "none | per_annotator");
        sub->add_option("--task", task, "1.1 | 1.2 | 1.3");
        sub->add_option("--model", model, "scbm | scbmt")->check(CLI::IsMember({"scbm", "scbmt"}));
        sub->add_option("--split", split, "Split used by predict, evaluate and local explanations");
    };
    auto* score = app.add_subcommand("score", "Score every post against the lexicon");
    auto* train_cmd = app.add_subcommand("train", "Train a head with early stopping on dev macro-F1");
    auto* predict = app.add_subcommand("predict", "Export predictions in submission format");
    auto* explain = app.add_subcommand("explain", "Write local or global explanation reports");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Write macro-F1 and cross-entropy per language");
    for (auto* s : {score, train_cmd, predict, explain, evaluate_cmd}) add_common(s);
    explain->add_flag("--global", global, "Per-class global explanations");

    std::string synth_out;
    std::size_t synth_posts = 500, synth_train = 400;
    double synth_margin = 2.0;
    auto* synth = app.add_subcommand("synth", "Write a separable synthetic corpus for offline runs");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--posts", synth_posts, "Number of posts");
    synth->add_option("--train", synth_train, "Posts in the train split");
    synth->add_option("--margin", synth_margin, "Required score gap");
    synth->add_option("--seed", seed, "Seed");
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        const auto* sub = app.get_subcommands().front();
        if (sub == synth) {
            SyntheticOptions o;
            o.posts = synth_posts;
            o.train = synth_train;
            o.margin = synth_margin;
            o.seed = seed;
            const SyntheticCorpus corpus = make_separable_corpus(load_lexicon(std::string(kDefaultLexiconTag)), o);
            fs::create_directories(synth_out);
            text::write_file((fs::path(synth_out) / "dataset.json").string(), dataset_json(corpus.posts));
            text::write_file((fs::path(synth_out) / "splits.json").string(), splits_json(corpus.splits));
            std::cout << "wrote " << corpus.posts.size() << " synthetic posts to " << synth_out << "\n";
            return kExitOk;
        }
        if (sub->count("--seed")) ov.seed = seed;
        if (!persona_mode.empty()) ov.persona_mode = persona_mode;
        if (!task.empty()) ov.task = task;
        if (!model.empty()) ov.model = model;
        if (!split.empty()) ov.split = split;
        const RunConfig cfg = load_run_config(config_path, ov);

        CommandResult result;
        if (sub == score) result = cmd_score(cfg);
        else if (sub == train_cmd) result = cmd_train(cfg);
        else if (sub == predict) result = cmd_predict(cfg);
        else if (sub == explain) result = cmd_explain(cfg, global);
        else result = cmd_evaluate(cfg);
        std::cout << result.summary << "\n";
        for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
        return kExitOk;
    } catch (const JoinError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& id : e.missing_ids()) std::cerr << "  missing: " << id << "\n";
        return e.exit_code();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackendError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

}  // namespace scbm::cli
