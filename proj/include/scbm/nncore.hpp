#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "scbm/random.hpp"

namespace scbm::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Affine layer y = W x + b. Batched inputs are column-major: one instance per
// column.
struct DenseParams {
    Matrix weight;  // out x in
    Vector bias;    // out

    static DenseParams zeros(Eigen::Index out, Eigen::Index in);
    // Uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias.
    static DenseParams xavier(Eigen::Index out, Eigen::Index in, Rng& rng);

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }
    bool all_finite() const { return weight.allFinite() && bias.allFinite(); }

    friend bool operator==(const DenseParams& a, const DenseParams& b) {
        return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
               a.bias.size() == b.bias.size() && a.weight == b.weight && a.bias == b.bias;
    }
};

Vector dense_forward(const DenseParams& params, const Vector& input);
Matrix dense_forward(const DenseParams& params, const Matrix& inputs);

Matrix sigmoid(const Matrix& z);
Matrix relu(const Matrix& z);
// Column-wise, max-shifted.
Matrix softmax(const Matrix& z);

enum class LossKind { softmax_cross_entropy_soft_target, per_label_binary_cross_entropy };

// Probabilities are clipped to [kProbClip, 1 - kProbClip] inside logarithms.
inline constexpr double kProbClip = 1e-7;

struct LossResult {
    double loss = 0.0;
    Matrix grad_logits;  // d(mean loss) / d(logits)
};

// Mean over columns of -sum_c t_c ln p_c with p = softmax(logits).
LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& targets);
// Mean over columns and labels of the binary cross-entropy of sigmoid(logits).
LossResult binary_cross_entropy(const Matrix& logits, const Matrix& targets);
LossResult compute_loss(LossKind kind, const Matrix& logits, const Matrix& targets);

// softmax for the soft-target loss, sigmoid for the per-label loss.
Matrix output_probabilities(LossKind kind, const Matrix& logits);

// ReLU hidden layers, linear output (logits).
class Mlp {
public:
    struct Trace {
        std::vector<Matrix> inputs;  // input of each layer
        std::vector<Matrix> pre;     // pre-activation of each layer
    };

    Mlp() = default;
    explicit Mlp(std::vector<DenseParams> layers);

    static Mlp create(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out, Rng& rng);

    Matrix forward(const Matrix& inputs) const;
    Matrix forward(const Matrix& inputs, Trace& trace) const;

    // Adds parameter gradients into `grads` (one entry per layer) and
    // returns d(loss)/d(inputs).
    Matrix backward(const Trace& trace, const Matrix& grad_logits, std::span<DenseParams> grads) const;

    Eigen::Index in_dim() const { return layers_.front().in_dim(); }
    Eigen::Index out_dim() const { return layers_.back().out_dim(); }
    std::vector<DenseParams>& layers() { return layers_; }
    const std::vector<DenseParams>& layers() const { return layers_; }

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<DenseParams> layers_;
};

struct RmsPropConfig {
    double learning_rate = 2e-3;
    double decay = 0.9;
    double epsilon = 1e-8;
};

struct RmsPropState {
    RmsPropConfig config;
    std::vector<DenseParams> accumulators;  // empty until the first step
};

// acc <- decay * acc + (1 - decay) * g^2
// p   <- p - lr * g / (sqrt(acc) + eps)
void rmsprop_step(std::span<DenseParams* const> params, std::span<const DenseParams> grads,
                  RmsPropState& state);

std::vector<DenseParams> zeros_like(std::span<const DenseParams* const> params);

}  // namespace scbm::nn
