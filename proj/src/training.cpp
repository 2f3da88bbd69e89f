#include "scbm/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "scbm/error.hpp"
#include "scbm/metrics.hpp"
#include "scbm/random.hpp"
#include "scbm/text.hpp"

namespace scbm {

TrainConfig TrainConfig::defaults(ModelKind kind, Task task) {
    TrainConfig c;
    c.kind = kind;
    c.task = task;
    if (kind == ModelKind::scbmt) {
        c.learning_rate = 1e-5;
        c.epochs = 16;
        c.patience = 3;
    }
    return c;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (epochs <= 0) throw ConfigError("epochs must be positive");
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    if (patience <= 0) throw ConfigError("patience must be positive");
    if (!(multilabel_threshold > 0.0 && multilabel_threshold < 1.0)) {
        throw ConfigError("multilabel threshold must lie in (0, 1)");
    }
    for (const auto h : shape.hidden) {
        if (h <= 0) throw ConfigError("hidden layer widths must be positive");
    }
    if (undersample_class) {
        if (task_kind(task) == TaskKind::multilabel) throw ConfigError("undersampling needs a single-label task");
        if (!parse_label(task, *undersample_class)) {
            throw ConfigError("undersample class '" + *undersample_class + "' is not a class of task " + task_id(task));
        }
    }
}

// --- vector lookup ------------------------------------------------------------------

VectorIndex::VectorIndex(const VectorTable& table, const ConceptLexicon& lexicon) {
    if (table.lexicon_version != lexicon.version()) {
        throw ConfigError("concept vectors were scored with lexicon '" + table.lexicon_version +
                          "', expected '" + lexicon.version() + "'");
    }
    if (table.adjectives != lexicon.concepts()) {
        throw ConfigError("concept vector columns do not match the lexicon order");
    }
    for (const auto& row : table.rows) {
        const std::string persona = row.persona_id.value_or("");
        if (!rows_.emplace(std::make_pair(row.instance_id, persona), &row.scores).second) {
            throw InvalidInput("duplicate concept vector for '" + row.instance_id +
                               (persona.empty() ? "" : "' persona '" + persona) + "'");
        }
        if (!persona.empty()) ++persona_counts_[row.instance_id];
    }
}

const std::vector<double>* VectorIndex::plain(const std::string& id) const {
    const auto it = rows_.find({id, ""});
    return it == rows_.end() ? nullptr : it->second;
}

std::vector<const std::vector<double>*> VectorIndex::personas(const AnnotatedPost& post) const {
    const auto count = persona_counts_.find(post.id);
    if (count == persona_counts_.end()) return {};
    if (count->second != kAnnotatorsPerPost || post.annotations.size() != kAnnotatorsPerPost) {
        throw AnnotationCountError("post '" + post.id + "' has " + std::to_string(count->second) +
                                       " persona vectors, expected six",
                                   {post.id});
    }
    std::vector<const std::vector<double>*> out;
    for (std::size_t a = 0; a < kAnnotatorsPerPost; ++a) {
        const auto it = rows_.find({post.id, persona_id_for(post, a)});
        if (it == rows_.end()) return {};
        out.push_back(it->second);
    }
    return out;
}

namespace {

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Training target for one row: vote fractions for single-label tasks, the
// label set as a 0/1 vector for the multilabel task.
std::vector<double> training_target(const Targets& t, Task task) {
    if (task_kind(task) != TaskKind::multilabel) return t.soft.distribution;
    std::vector<double> out(label_universe(task).size(), 0.0);
    for (const int l : hard_set(t.hard)) out[static_cast<std::size_t>(l)] = 1.0;
    return out;
}

struct Row {
    const std::vector<double>* concepts;
    std::string embedding_id;
    std::vector<double> target;
};

struct DevPost {
    std::vector<const std::vector<double>*> concepts;  // 1 or 6
    HardLabel gold;
};

Matrix columns(const std::vector<const std::vector<double>*>& rows, std::size_t dim) {
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = to_vector(*rows[j]);
    return m;
}

Matrix head_probabilities(const Head& head, const Matrix& concepts, const Matrix* embeddings) {
    return std::visit(
        [&](const auto& h) -> Matrix {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, ScbmHead>) {
                return h.forward_batch(concepts).probabilities;
            } else {
                if (embeddings == nullptr) throw ConfigError("SCBMT inference needs embeddings");
                return h.forward_batch(concepts, *embeddings);
            }
        },
        head);
}

Matrix repeat_column(const Vector& v, Eigen::Index n) {
    Matrix m(v.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) m.col(j) = v;
    return m;
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + ids[i];
    if (ids.size() > 20) s += ", ...";
    return s;
}

}  // namespace

// --- voting ---------------------------------------------------------------------------

VoteResult vote(const std::vector<Prediction>& predictions, Task task, const DecisionRule& rule) {
    if (predictions.size() != kAnnotatorsPerPost) {
        throw AnnotationCountError("voting needs six predictions, got " + std::to_string(predictions.size()), {});
    }
    const std::size_t k = output_arity(task);
    std::vector<double> mean(k, 0.0);
    for (const auto& p : predictions) {
        if (static_cast<std::size_t>(p.probabilities.size()) != k) throw ConfigError("prediction arity mismatch");
        for (std::size_t c = 0; c < k; ++c) mean[c] += p.probabilities(static_cast<Eigen::Index>(c));
    }
    for (auto& m : mean) m /= static_cast<double>(kAnnotatorsPerPost);

    std::vector<int> votes(k, 0);
    if (task_kind(task) == TaskKind::multilabel) {
        for (const auto& p : predictions) {
            for (const int l : hard_set(p.label)) ++votes[static_cast<std::size_t>(l)];
        }
        std::vector<int> kept;
        for (std::size_t c = 0; c < k; ++c) {
            if (votes[c] >= 4 || (votes[c] == 3 && mean[c] >= rule.multilabel_threshold)) {
                kept.push_back(static_cast<int>(c));
            }
        }
        return {HardLabel{std::move(kept)}, std::move(mean)};
    }

    for (const auto& p : predictions) ++votes[static_cast<std::size_t>(hard_class(p.label))];
    const int top = *std::max_element(votes.begin(), votes.end());
    std::vector<int> tied;
    for (std::size_t c = 0; c < k; ++c) {
        if (votes[c] == top) tied.push_back(static_cast<int>(c));
    }
    int best = tied.front();
    if (tied.size() > 1) {
        if (task_kind(task) == TaskKind::binary) {
            best = rule.binary_tie_class;
        } else {
            for (const int c : tied) {
                if (mean[static_cast<std::size_t>(c)] > mean[static_cast<std::size_t>(best)]) best = c;
            }
        }
    }
    return {HardLabel{best}, std::move(mean)};
}

VoteResult infer_with_voting(const Checkpoint& checkpoint, const std::vector<std::vector<double>>& vectors,
                             const Matrix* embeddings, Task task, const DecisionRule& rule) {
    if (vectors.size() != kAnnotatorsPerPost) {
        throw AnnotationCountError("voting needs six persona vectors, got " + std::to_string(vectors.size()), {});
    }
    std::vector<const std::vector<double>*> ptrs;
    for (const auto& v : vectors) ptrs.push_back(&v);
    const std::size_t dim = checkpoint.lexicon.size();
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ShapeError("persona vector length does not match the lexicon");
    }
    const Matrix probs = head_probabilities(checkpoint.head, columns(ptrs, dim), embeddings);
    std::vector<Prediction> preds;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) preds.push_back(decide(probs.col(j), task, rule));
    return vote(preds, task, rule);
}

std::vector<InstancePrediction> infer_corpus(const Checkpoint& checkpoint,
                                             const std::vector<AnnotatedPost>& posts,
                                             const std::vector<std::string>& ids,
                                             const VectorTable& vectors, const EmbeddingTable* embeddings,
                                             PersonaMode mode) {
    const Task task = task_of(checkpoint.head);
    const DecisionRule rule{checkpoint.multilabel_threshold, 0};
    const VectorIndex index(vectors, checkpoint.lexicon);
    const bool needs_embeddings = kind_of(checkpoint.head) == ModelKind::scbmt;
    if (needs_embeddings && embeddings == nullptr) throw ConfigError("SCBMT prediction needs an embeddings file");

    std::map<std::string, const AnnotatedPost*> by_id;
    for (const auto& p : posts) by_id.emplace(p.id, &p);
    std::vector<const AnnotatedPost*> selected;
    std::vector<std::string> missing;
    if (ids.empty()) {
        for (const auto& p : posts) selected.push_back(&p);
    } else {
        for (const auto& id : ids) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) missing.push_back(id);
            else selected.push_back(it->second);
        }
    }
    std::vector<std::vector<const std::vector<double>*>> rows;
    for (const auto* p : selected) {
        auto r = mode == PersonaMode::none ? std::vector<const std::vector<double>*>{index.plain(p->id)}
                                           : index.personas(*p);
        if (r.empty() || r.front() == nullptr) missing.push_back(p->id);
        rows.push_back(std::move(r));
    }
    if (!missing.empty()) {
        throw JoinError(std::to_string(missing.size()) + " post(s) lack data or concept vectors: " + join_ids(missing),
                        missing);
    }
    if (needs_embeddings) {
        std::vector<std::string> sel_ids;
        for (const auto* p : selected) sel_ids.push_back(p->id);
        (void)embeddings->gather(sel_ids);  // JoinError listing every gap
    }

    std::vector<InstancePrediction> out;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const AnnotatedPost& post = *selected[i];
        std::optional<Matrix> emb;
        if (needs_embeddings) {
            emb = repeat_column(embeddings->vectors.at(post.id), static_cast<Eigen::Index>(rows[i].size()));
        }
        const Matrix probs = head_probabilities(checkpoint.head, columns(rows[i], checkpoint.lexicon.size()),
                                                emb ? &*emb : nullptr);
        InstancePrediction ip;
        ip.id = post.id;
        ip.lang = post.lang;
        if (mode == PersonaMode::none) {
            Prediction p = decide(probs.col(0), task, rule);
            ip.label = std::move(p.label);
            ip.probabilities = to_std(p.probabilities);
        } else {
            std::vector<Prediction> preds;
            for (Eigen::Index j = 0; j < probs.cols(); ++j) preds.push_back(decide(probs.col(j), task, rule));
            VoteResult v = vote(preds, task, rule);
            ip.label = std::move(v.label);
            ip.probabilities = std::move(v.soft);
        }
        out.push_back(std::move(ip));
    }
    return out;
}

// --- training ---------------------------------------------------------------------------

TrainResult train(const TrainConfig& config, const std::vector<AnnotatedPost>& posts,
                  const VectorTable& vectors, const ConceptLexicon& lexicon,
                  const EmbeddingTable* embeddings, const SplitManifest& splits) {
    config.validate();
    const Task task = config.task;
    const bool persona = config.persona_mode == PersonaMode::per_annotator;
    const bool scbmt = config.kind == ModelKind::scbmt;
    if (scbmt && embeddings == nullptr) throw ConfigError("SCBMT training needs an embeddings file");
    if (lexicon.empty()) throw EmptyLexicon("training needs a non-empty lexicon");

    const auto split = [&](const char* name) -> const std::vector<std::string>& {
        const auto it = splits.find(name);
        if (it == splits.end() || it->second.empty()) {
            throw ConfigError(std::string("split manifest has no '") + name + "' ids");
        }
        return it->second;
    };
    const auto& train_ids = split("train");
    const auto& dev_ids = split("dev");

    std::map<std::string, const AnnotatedPost*> by_id;
    for (const auto& p : posts) by_id.emplace(p.id, &p);
    const VectorIndex index(vectors, lexicon);

    // Coverage check over both splits before any work.
    std::vector<std::string> missing;
    std::set<std::string> seen;
    for (const auto* ids : {&train_ids, &dev_ids}) {
        for (const auto& id : *ids) {
            if (!seen.insert(id).second) continue;
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                missing.push_back(id);
                continue;
            }
            const bool covered = persona ? !index.personas(*it->second).empty() : index.plain(id) != nullptr;
            if (!covered) missing.push_back(id);
            if (!it->second->has_labels(task)) {
                throw DatasetError("post '" + id + "' has no labels for task " + task_id(task), {id});
            }
        }
    }
    if (!missing.empty()) {
        throw JoinError(std::to_string(missing.size()) + " split id(s) lack posts or concept vectors: " +
                            join_ids(missing),
                        missing);
    }
    if (scbmt) {
        std::vector<std::string> all(seen.begin(), seen.end());
        (void)embeddings->gather(all);
    }

    std::vector<AnnotatedPost> train_posts;
    for (const auto& id : train_ids) train_posts.push_back(*by_id.at(id));
    TrainResult result;
    if (config.undersample_class) {
        const int cls = *parse_label(task, *config.undersample_class);
        UndersampleResult u = undersample(train_posts, task, cls, config.seed);
        if (u.no_op) {
            spdlog::warn("{}", u.warning);
            result.undersample_warning = u.warning;
        }
        train_posts = std::move(u.posts);
    }

    std::vector<Row> rows;
    for (const auto& post : train_posts) {
        if (persona) {
            const auto pv = index.personas(post);
            for (std::size_t a = 0; a < kAnnotatorsPerPost; ++a) {
                rows.push_back({pv[a], post.id, training_target(annotator_targets(post.annotations[a], task), task)});
            }
        } else {
            rows.push_back({index.plain(post.id), post.id, training_target(derive_targets(post, task), task)});
        }
    }
    std::vector<DevPost> dev;
    for (const auto& id : dev_ids) {
        const AnnotatedPost& post = *by_id.at(id);
        dev.push_back({persona ? index.personas(post) : std::vector<const std::vector<double>*>{index.plain(id)},
                       derive_targets(post, task).hard});
    }
    result.train_posts = train_posts.size();
    result.train_rows = rows.size();
    result.dev_posts = dev.size();

    Rng rng(config.seed);
    const std::size_t dim = lexicon.size();
    Head head = scbmt ? Head(ScbmtHead::create(dim, embeddings->dim, task, config.shape, rng))
                      : Head(ScbmHead::create(dim, task, config.shape, rng));
    nn::RmsPropState optimizer;
    optimizer.config.learning_rate = config.learning_rate;
    const DecisionRule rule{config.multilabel_threshold, 0};

    const auto evaluate_dev = [&](const Head& h) {
        std::vector<HardLabel> pred, gold;
        for (const auto& d : dev) {
            std::optional<Matrix> emb;
            if (scbmt) {
                // Every persona row of a post shares the post's embedding.
                const std::string& id = dev_ids[static_cast<std::size_t>(&d - dev.data())];
                emb = repeat_column(embeddings->vectors.at(id), static_cast<Eigen::Index>(d.concepts.size()));
            }
            const Matrix probs = head_probabilities(h, columns(d.concepts, dim), emb ? &*emb : nullptr);
            if (persona) {
                std::vector<Prediction> preds;
                for (Eigen::Index j = 0; j < probs.cols(); ++j) preds.push_back(decide(probs.col(j), task, rule));
                pred.push_back(vote(preds, task, rule).label);
            } else {
                pred.push_back(decide(probs.col(0), task, rule).label);
            }
            gold.push_back(d.gold);
        }
        return macro_f1(pred, gold, task);
    };

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t k = output_arity(task);
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    Head best_head = head;
    nn::RmsPropState best_optimizer = optimizer;
    double best_f1 = -1.0;
    int best_epoch = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const auto n = static_cast<Eigen::Index>(end - begin);
            Matrix c(static_cast<Eigen::Index>(dim), n);
            Matrix t(static_cast<Eigen::Index>(k), n);
            Matrix e;
            if (scbmt) e.resize(static_cast<Eigen::Index>(embeddings->dim), n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const Row& row = rows[order[begin + static_cast<std::size_t>(j)]];
                c.col(j) = to_vector(*row.concepts);
                t.col(j) = to_vector(row.target);
                if (scbmt) e.col(j) = embeddings->vectors.at(row.embedding_id);
            }
            LossAndGrad lg = std::visit(
                [&](auto& h) {
                    using T = std::decay_t<decltype(h)>;
                    LossAndGrad out;
                    if constexpr (std::is_same_v<T, ScbmHead>) {
                        out = h.loss_and_grad(c, t);
                    } else {
                        out = h.loss_and_grad(c, e, t);
                    }
                    const auto params = h.parameters();
                    nn::rmsprop_step(params, out.grads, optimizer);
                    return out;
                },
                head);
            loss_sum += lg.loss * static_cast<double>(n);
        }
        const bool finite = std::visit(
            [](const auto& h) {
                for (const auto* p : h.parameters()) {
                    if (!p->all_finite()) return false;
                }
                return true;
            },
            head);
        if (!finite) throw NumericalError("parameters became non-finite in epoch " + std::to_string(epoch));

        const double f1 = evaluate_dev(head);
        const double mean_loss = loss_sum / static_cast<double>(rows.size());
        result.history.push_back({epoch, mean_loss, f1});
        spdlog::debug("epoch {} loss {} dev macro-F1 {}", epoch, mean_loss, f1);
        if (f1 > best_f1) {
            best_f1 = f1;
            best_epoch = epoch;
            best_head = head;
            best_optimizer = optimizer;
        } else if (epoch - best_epoch >= config.patience) {
            spdlog::info("early stop at epoch {} (best {} at epoch {})", epoch, best_f1, best_epoch);
            break;
        }
    }

    result.best_epoch = best_epoch;
    result.best_dev_macro_f1 = best_f1;
    Checkpoint& ck = result.checkpoint;
    ck.head = std::move(best_head);
    ck.lexicon = lexicon;
    ck.seed = config.seed;
    ck.optimizer = std::move(best_optimizer);
    ck.multilabel_threshold = config.multilabel_threshold;
    ck.metadata["persona_mode"] = to_string(config.persona_mode);
    ck.metadata["best_epoch"] = std::to_string(best_epoch);
    ck.metadata["epochs"] = std::to_string(config.epochs);
    ck.metadata["batch_size"] = std::to_string(config.batch_size);
    ck.metadata["patience"] = std::to_string(config.patience);
    if (scbmt) ck.metadata["embedding_provider"] = embeddings->provider_tag;
    return result;
}

}  // namespace scbm
