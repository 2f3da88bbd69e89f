#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scbm/dataset.hpp"
#include "scbm/nncore.hpp"
#include "scbm/task.hpp"

namespace scbm {

using nn::DenseParams;
using nn::Matrix;
using nn::Vector;

nn::LossKind loss_for(Task task);
std::size_t output_arity(Task task);

struct HeadShape {
    std::vector<Eigen::Index> hidden{64};
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<DenseParams> grads;  // same order as parameters()
};

// Relevance-gated concept bottleneck head:
//   g = sigmoid(W_g c + b_g),  r = g * c (element-wise),  y = MLP(r)
// r is the per-concept activation used for explanations.
class ScbmHead {
public:
    ScbmHead() = default;
    ScbmHead(DenseParams gate, nn::Mlp mlp, Task task);

    static ScbmHead create(std::size_t concepts, Task task, const HeadShape& shape, Rng& rng);

    struct Output {
        Vector probabilities;  // softmax or per-label sigmoid
        Vector activation;     // gated concept activation r
    };
    Output forward(const Vector& concepts) const;

    struct BatchOutput {
        Matrix probabilities;
        Matrix activations;
    };
    BatchOutput forward_batch(const Matrix& concepts) const;

    LossAndGrad loss_and_grad(const Matrix& concepts, const Matrix& targets) const;

    std::vector<DenseParams*> parameters();
    std::vector<const DenseParams*> parameters() const;

    std::size_t concept_count() const { return static_cast<std::size_t>(gate_.in_dim()); }
    Task task() const { return task_; }
    const DenseParams& gate() const { return gate_; }
    DenseParams& gate() { return gate_; }
    const nn::Mlp& mlp() const { return mlp_; }
    nn::Mlp& mlp() { return mlp_; }

    friend bool operator==(const ScbmHead&, const ScbmHead&) = default;

private:
    void check_input(Eigen::Index rows) const;

    DenseParams gate_;
    nn::Mlp mlp_;
    Task task_ = Task::identification;
};

// Fusion head: y = MLP([P c + b_p ; e]) where e is a precomputed text
// embedding of dimension d_e and P projects the concept vector to d_e.
class ScbmtHead {
public:
    ScbmtHead() = default;
    ScbmtHead(DenseParams projection, nn::Mlp mlp, Task task);

    static ScbmtHead create(std::size_t concepts, std::size_t embedding_dim, Task task,
                            const HeadShape& shape, Rng& rng);

    Vector forward(const Vector& concepts, const Vector& embedding) const;
    Matrix forward_batch(const Matrix& concepts, const Matrix& embeddings) const;

    LossAndGrad loss_and_grad(const Matrix& concepts, const Matrix& embeddings,
                              const Matrix& targets) const;

    std::vector<DenseParams*> parameters();
    std::vector<const DenseParams*> parameters() const;

    std::size_t concept_count() const { return static_cast<std::size_t>(projection_.in_dim()); }
    std::size_t embedding_dim() const { return static_cast<std::size_t>(projection_.out_dim()); }
    Task task() const { return task_; }
    const DenseParams& projection() const { return projection_; }
    DenseParams& projection() { return projection_; }
    const nn::Mlp& mlp() const { return mlp_; }
    nn::Mlp& mlp() { return mlp_; }

    friend bool operator==(const ScbmtHead&, const ScbmtHead&) = default;

private:
    Matrix fused(const Matrix& concepts, const Matrix& embeddings) const;

    DenseParams projection_;
    nn::Mlp mlp_;
    Task task_ = Task::identification;
};

using Head = std::variant<ScbmHead, ScbmtHead>;

enum class ModelKind { scbm, scbmt };
ModelKind parse_model_kind(std::string_view s);
std::string to_string(ModelKind kind);
ModelKind kind_of(const Head& head);
Task task_of(const Head& head);

// Tie and threshold rules shared by prediction, voting and evaluation.
struct DecisionRule {
    double multilabel_threshold = 0.5;  // label kept when p >= threshold
    int binary_tie_class = 0;           // SEXIST
};

struct Prediction {
    HardLabel label;
    Vector probabilities;
};

// Binary/multiclass: argmax, binary ties go to `binary_tie_class`, other ties
// to the lowest index. Multilabel: every label with p >= threshold.
// Throws ConfigError when the output length does not match the task.
Prediction decide(const Vector& probabilities, Task task, const DecisionRule& rule = {});

// Batched inference. `embeddings` is required for SCBMT heads and ignored
// otherwise. One column per instance.
std::vector<Prediction> predict(const Head& head, const Matrix& concepts, const Matrix* embeddings,
                                Task task, const DecisionRule& rule = {});

// Precomputed text embeddings.
//   #scbm-embeddings v1 dim=<d_e> provider=<tag>
//   <id><TAB><v0><TAB>...<TAB><v d_e-1>
struct EmbeddingRecord {
    std::string instance_id;
    Vector vector;
    std::string provider_tag;
};

struct EmbeddingTable {
    std::size_t dim = 0;
    std::string provider_tag;
    std::map<std::string, Vector> vectors;

    // Column matrix for `ids` in order; JoinError lists every missing id.
    Matrix gather(const std::vector<std::string>& ids) const;
};

// Rows with the wrong length or non-finite values fail here, at load.
EmbeddingTable parse_embeddings(std::string_view contents);
EmbeddingTable load_embeddings(const std::string& path);
std::string export_embeddings(const EmbeddingTable& table);

}  // namespace scbm
