#include "scbm/nncore.hpp"

#include <cmath>
#include <string>

#include "scbm/error.hpp"

namespace scbm::nn {
namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw NumericalError(std::string("non-finite values in ") + what);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": logits " + shape(a.rows(), a.cols()) + " vs targets " +
                         shape(b.rows(), b.cols()));
    }
    if (a.cols() == 0) throw InvalidInput(std::string(what) + ": empty batch");
}

}  // namespace

DenseParams DenseParams::zeros(Eigen::Index out, Eigen::Index in) {
    return {Matrix::Zero(out, in), Vector::Zero(out)};
}

DenseParams DenseParams::xavier(Eigen::Index out, Eigen::Index in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseParams p = zeros(out, in);
    // Fill row by row so the draw order does not depend on storage order.
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) p.weight(r, c) = rng.uniform(-limit, limit);
    }
    return p;
}

Vector dense_forward(const DenseParams& params, const Vector& input) {
    if (input.size() != params.in_dim()) {
        throw ShapeError("dense layer expects input of length " + std::to_string(params.in_dim()) +
                         ", got " + std::to_string(input.size()));
    }
    return params.weight * input + params.bias;
}

Matrix dense_forward(const DenseParams& params, const Matrix& inputs) {
    if (inputs.rows() != params.in_dim()) {
        throw ShapeError("dense layer expects " + std::to_string(params.in_dim()) + " input rows, got " +
                         std::to_string(inputs.rows()));
    }
    Matrix out = params.weight * inputs;
    out.colwise() += params.bias;
    return out;
}

Matrix sigmoid(const Matrix& z) {
    // Split by sign so exp never overflows.
    return z.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

Matrix softmax(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const Vector shifted = z.col(j).array() - z.col(j).maxCoeff();
        const Vector e = shifted.array().exp();
        out.col(j) = e / e.sum();
    }
    return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& targets) {
    require_same_shape(logits, targets, "softmax cross-entropy");
    require_finite(logits, "logits");
    const Matrix p = softmax(logits);
    const double n = static_cast<double>(logits.cols());

    LossResult r;
    r.grad_logits.resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        // d/dp of -sum t ln clip(p); zero where the clip is active.
        Vector g(logits.rows());
        for (Eigen::Index c = 0; c < logits.rows(); ++c) {
            const double pc = p(c, j);
            const double clipped = std::clamp(pc, kProbClip, 1.0 - kProbClip);
            const double t = targets(c, j);
            if (t != 0.0) total -= t * std::log(clipped);
            g(c) = (pc == clipped) ? -t / pc : 0.0;
        }
        // Softmax Jacobian: dz = p * (g - p.g)
        const double dot = p.col(j).dot(g);
        r.grad_logits.col(j) = p.col(j).array() * (g.array() - dot) / n;
    }
    r.loss = total / n;
    if (!std::isfinite(r.loss)) throw NumericalError("softmax cross-entropy is not finite");
    return r;
}

LossResult binary_cross_entropy(const Matrix& logits, const Matrix& targets) {
    require_same_shape(logits, targets, "binary cross-entropy");
    require_finite(logits, "logits");
    const Matrix q = sigmoid(logits);
    const double n = static_cast<double>(logits.size());

    LossResult r;
    r.grad_logits.resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        for (Eigen::Index c = 0; c < logits.rows(); ++c) {
            const double qc = q(c, j);
            const double clipped = std::clamp(qc, kProbClip, 1.0 - kProbClip);
            const double t = targets(c, j);
            total -= t * std::log(clipped) + (1.0 - t) * std::log(1.0 - clipped);
            r.grad_logits(c, j) = (qc == clipped) ? (qc - t) / n : 0.0;
        }
    }
    r.loss = total / n;
    if (!std::isfinite(r.loss)) throw NumericalError("binary cross-entropy is not finite");
    return r;
}

LossResult compute_loss(LossKind kind, const Matrix& logits, const Matrix& targets) {
    return kind == LossKind::softmax_cross_entropy_soft_target ? softmax_cross_entropy(logits, targets)
                                                               : binary_cross_entropy(logits, targets);
}

Matrix output_probabilities(LossKind kind, const Matrix& logits) {
    return kind == LossKind::softmax_cross_entropy_soft_target ? softmax(logits) : sigmoid(logits);
}

// --- MLP ----------------------------------------------------------------------

Mlp::Mlp(std::vector<DenseParams> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("MLP needs at least one layer");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
            throw ShapeError("MLP layer " + std::to_string(i) + " input does not match previous output");
        }
    }
    for (const auto& l : layers_) {
        if (l.bias.size() != l.out_dim()) throw ShapeError("MLP bias length does not match layer output");
    }
}

Mlp Mlp::create(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out, Rng& rng) {
    std::vector<DenseParams> layers;
    Eigen::Index prev = in;
    for (const Eigen::Index h : hidden) {
        layers.push_back(DenseParams::xavier(h, prev, rng));
        prev = h;
    }
    layers.push_back(DenseParams::xavier(out, prev, rng));
    return Mlp(std::move(layers));
}

Matrix Mlp::forward(const Matrix& inputs) const {
    Matrix x = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Matrix z = dense_forward(layers_[i], x);
        x = (i + 1 < layers_.size()) ? relu(z) : std::move(z);
    }
    return x;
}

Matrix Mlp::forward(const Matrix& inputs, Trace& trace) const {
    trace.inputs.clear();
    trace.pre.clear();
    Matrix x = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        trace.inputs.push_back(x);
        Matrix z = dense_forward(layers_[i], x);
        trace.pre.push_back(z);
        x = (i + 1 < layers_.size()) ? relu(z) : std::move(z);
    }
    return x;
}

Matrix Mlp::backward(const Trace& trace, const Matrix& grad_logits, std::span<DenseParams> grads) const {
    if (grads.size() != layers_.size()) throw ShapeError("gradient list does not match MLP depth");
    Matrix delta = grad_logits;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (k + 1 < layers_.size()) {
            delta = delta.cwiseProduct(
                trace.pre[k].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
        grads[k].weight += delta * trace.inputs[k].transpose();
        grads[k].bias += delta.rowwise().sum();
        delta = layers_[k].weight.transpose() * delta;
    }
    return delta;
}

// --- RMSProp --------------------------------------------------------------------

std::vector<DenseParams> zeros_like(std::span<const DenseParams* const> params) {
    std::vector<DenseParams> out;
    out.reserve(params.size());
    for (const auto* p : params) out.push_back(DenseParams::zeros(p->out_dim(), p->in_dim()));
    return out;
}

void rmsprop_step(std::span<DenseParams* const> params, std::span<const DenseParams> grads,
                  RmsPropState& state) {
    if (params.size() != grads.size()) throw ShapeError("RMSProp: parameter/gradient count mismatch");
    if (state.accumulators.empty()) {
        std::vector<const DenseParams*> cp(params.begin(), params.end());
        state.accumulators = zeros_like(cp);
    }
    if (state.accumulators.size() != params.size()) throw ShapeError("RMSProp: state does not match parameters");

    const auto& cfg = state.config;
    for (std::size_t i = 0; i < params.size(); ++i) {
        DenseParams& p = *params[i];
        const DenseParams& g = grads[i];
        DenseParams& acc = state.accumulators[i];
        if (!(g.weight.rows() == p.weight.rows() && g.weight.cols() == p.weight.cols() &&
              g.bias.size() == p.bias.size() && acc.weight.rows() == p.weight.rows() &&
              acc.weight.cols() == p.weight.cols())) {
            throw ShapeError("RMSProp: shape mismatch in parameter " + std::to_string(i));
        }
        acc.weight = cfg.decay * acc.weight.array() + (1.0 - cfg.decay) * g.weight.array().square();
        acc.bias = cfg.decay * acc.bias.array() + (1.0 - cfg.decay) * g.bias.array().square();
        p.weight.array() -= cfg.learning_rate * g.weight.array() / (acc.weight.array().sqrt() + cfg.epsilon);
        p.bias.array() -= cfg.learning_rate * g.bias.array() / (acc.bias.array().sqrt() + cfg.epsilon);
    }
}

}  // namespace scbm::nn
