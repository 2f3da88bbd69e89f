#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scbm/checkpoint.hpp"
#include "scbm/dataset.hpp"
#include "scbm/models.hpp"
#include "scbm/scorer.hpp"
#include "scbm/vectors.hpp"

namespace scbm {

struct TrainConfig {
    ModelKind kind = ModelKind::scbm;
    Task task = Task::identification;
    double learning_rate = 2e-3;
    int epochs = 300;
    int batch_size = 32;
    int patience = 20;
    PersonaMode persona_mode = PersonaMode::none;
    // Class name to undersample in the training split, applied per post
    // before persona expansion.
    std::optional<std::string> undersample_class;
    std::uint64_t seed = 0;
    HeadShape shape;
    double multilabel_threshold = 0.5;

    // SCBM: lr 2e-3, 300 epochs, patience 20. SCBMT: lr 1e-5, 16 epochs,
    // patience 3. Batch size 32 for both.
    static TrainConfig defaults(ModelKind kind, Task task);
    void validate() const;  // ConfigError
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_macro_f1 = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;  // best-dev parameters and optimizer state
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_dev_macro_f1 = 0.0;
    std::size_t train_posts = 0;
    std::size_t train_rows = 0;
    std::size_t dev_posts = 0;
    std::optional<std::string> undersample_warning;
};

// Trains on split "train" and early-stops on macro-F1 over split "dev".
// `vectors` must hold one row per post (persona mode none) or six rows whose
// persona ids match the post's annotators (per_annotator). Single-label tasks
// train on vote fractions, or on each annotator's own label in persona mode;
// the multilabel task trains on the hard label set.
// Throws JoinError when split ids are missing from the dataset, vectors or
// embeddings; ConfigError on inconsistent inputs.
TrainResult train(const TrainConfig& config, const std::vector<AnnotatedPost>& posts,
                  const VectorTable& vectors, const ConceptLexicon& lexicon,
                  const EmbeddingTable* embeddings, const SplitManifest& splits);

struct VoteResult {
    HardLabel label;
    std::vector<double> soft;  // mean of the six distributions
};

// Combines six per-annotator predictions.
//   binary: majority class; a 3-3 split goes to rule.binary_tie_class.
//   multiclass: most votes; ties go to the highest mean probability among the
//     tied classes, then the lowest index.
//   multilabel: a label is kept with 4+ votes; with exactly 3 it is kept when
//     its mean probability is >= rule.multilabel_threshold.
// Throws AnnotationCountError unless exactly six predictions are given.
VoteResult vote(const std::vector<Prediction>& predictions, Task task, const DecisionRule& rule = {});

// Six concept vectors (and, for SCBMT, six embedding columns) for one post.
VoteResult infer_with_voting(const Checkpoint& checkpoint, const std::vector<std::vector<double>>& vectors,
                             const Matrix* embeddings, Task task, const DecisionRule& rule = {});

struct InstancePrediction {
    std::string id;
    Lang lang = Lang::en;
    HardLabel label;
    std::vector<double> probabilities;
};

// Predicts every post in `ids` (all posts when empty) with the checkpoint,
// voting over personas in per_annotator mode.
std::vector<InstancePrediction> infer_corpus(const Checkpoint& checkpoint,
                                             const std::vector<AnnotatedPost>& posts,
                                             const std::vector<std::string>& ids,
                                             const VectorTable& vectors, const EmbeddingTable* embeddings,
                                             PersonaMode mode);

// Lookup of concept rows by (instance, persona).
class VectorIndex {
public:
    VectorIndex(const VectorTable& table, const ConceptLexicon& lexicon);

    // Row for a post without persona, or nullptr.
    const std::vector<double>* plain(const std::string& id) const;
    // The six persona rows of `post` in annotator order; empty when any is missing.
    std::vector<const std::vector<double>*> personas(const AnnotatedPost& post) const;

private:
    std::map<std::pair<std::string, std::string>, const std::vector<double>*> rows_;
    std::map<std::string, std::size_t> persona_counts_;
};

}  // namespace scbm
