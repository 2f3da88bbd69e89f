#include "scbm/models.hpp"

#include <cmath>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {

nn::LossKind loss_for(Task task) {
    return task_kind(task) == TaskKind::multilabel ? nn::LossKind::per_label_binary_cross_entropy
                                                   : nn::LossKind::softmax_cross_entropy_soft_target;
}

std::size_t output_arity(Task task) { return label_universe(task).size(); }

// --- SCBM -----------------------------------------------------------------------

ScbmHead::ScbmHead(DenseParams gate, nn::Mlp mlp, Task task)
    : gate_(std::move(gate)), mlp_(std::move(mlp)), task_(task) {
    if (gate_.in_dim() != gate_.out_dim()) throw ShapeError("relevance gate must be square");
    if (mlp_.in_dim() != gate_.out_dim()) throw ShapeError("MLP input must match the concept count");
    if (static_cast<std::size_t>(mlp_.out_dim()) != output_arity(task_)) {
        throw ShapeError("MLP output does not match the task arity");
    }
}

ScbmHead ScbmHead::create(std::size_t concepts, Task task, const HeadShape& shape, Rng& rng) {
    const auto l = static_cast<Eigen::Index>(concepts);
    DenseParams gate = DenseParams::xavier(l, l, rng);
    nn::Mlp mlp = nn::Mlp::create(l, shape.hidden, static_cast<Eigen::Index>(output_arity(task)), rng);
    return ScbmHead(std::move(gate), std::move(mlp), task);
}

void ScbmHead::check_input(Eigen::Index rows) const {
    if (rows != gate_.in_dim()) {
        throw ShapeError("concept vector has " + std::to_string(rows) + " entries, head expects " +
                         std::to_string(gate_.in_dim()));
    }
}

ScbmHead::Output ScbmHead::forward(const Vector& concepts) const {
    check_input(concepts.size());
    const BatchOutput b = forward_batch(Matrix(concepts));
    return {b.probabilities.col(0), b.activations.col(0)};
}

ScbmHead::BatchOutput ScbmHead::forward_batch(const Matrix& concepts) const {
    check_input(concepts.rows());
    const Matrix g = nn::sigmoid(nn::dense_forward(gate_, concepts));
    Matrix r = g.cwiseProduct(concepts);
    Matrix logits = mlp_.forward(r);
    return {nn::output_probabilities(loss_for(task_), logits), std::move(r)};
}

LossAndGrad ScbmHead::loss_and_grad(const Matrix& concepts, const Matrix& targets) const {
    check_input(concepts.rows());
    const Matrix g = nn::sigmoid(nn::dense_forward(gate_, concepts));
    const Matrix r = g.cwiseProduct(concepts);
    nn::Mlp::Trace trace;
    const Matrix logits = mlp_.forward(r, trace);
    const nn::LossResult loss = nn::compute_loss(loss_for(task_), logits, targets);

    LossAndGrad out;
    out.loss = loss.loss;
    out.grads = nn::zeros_like(parameters());
    const Matrix d_r = mlp_.backward(trace, loss.grad_logits, std::span(out.grads).subspan(1));
    const Matrix d_a = d_r.cwiseProduct(concepts).cwiseProduct(g).cwiseProduct(
        (1.0 - g.array()).matrix());
    out.grads[0].weight = d_a * concepts.transpose();
    out.grads[0].bias = d_a.rowwise().sum();
    return out;
}

std::vector<DenseParams*> ScbmHead::parameters() {
    std::vector<DenseParams*> out{&gate_};
    for (auto& l : mlp_.layers()) out.push_back(&l);
    return out;
}

std::vector<const DenseParams*> ScbmHead::parameters() const {
    std::vector<const DenseParams*> out{&gate_};
    for (const auto& l : mlp_.layers()) out.push_back(&l);
    return out;
}

// --- SCBMT ----------------------------------------------------------------------

ScbmtHead::ScbmtHead(DenseParams projection, nn::Mlp mlp, Task task)
    : projection_(std::move(projection)), mlp_(std::move(mlp)), task_(task) {
    if (mlp_.in_dim() != 2 * projection_.out_dim()) {
        throw ShapeError("fusion MLP input must be twice the embedding dimension");
    }
    if (static_cast<std::size_t>(mlp_.out_dim()) != output_arity(task_)) {
        throw ShapeError("MLP output does not match the task arity");
    }
}

ScbmtHead ScbmtHead::create(std::size_t concepts, std::size_t embedding_dim, Task task,
                            const HeadShape& shape, Rng& rng) {
    const auto d = static_cast<Eigen::Index>(embedding_dim);
    DenseParams projection = DenseParams::xavier(d, static_cast<Eigen::Index>(concepts), rng);
    nn::Mlp mlp = nn::Mlp::create(2 * d, shape.hidden, static_cast<Eigen::Index>(output_arity(task)), rng);
    return ScbmtHead(std::move(projection), std::move(mlp), task);
}

Matrix ScbmtHead::fused(const Matrix& concepts, const Matrix& embeddings) const {
    if (concepts.rows() != projection_.in_dim()) {
        throw ShapeError("concept vector has " + std::to_string(concepts.rows()) +
                         " entries, head expects " + std::to_string(projection_.in_dim()));
    }
    if (embeddings.rows() != projection_.out_dim()) {
        throw ShapeError("embedding has dimension " + std::to_string(embeddings.rows()) +
                         ", head expects " + std::to_string(projection_.out_dim()));
    }
    if (embeddings.cols() != concepts.cols()) throw ShapeError("concept and embedding batch sizes differ");
    Matrix x(2 * projection_.out_dim(), concepts.cols());
    x.topRows(projection_.out_dim()) = nn::dense_forward(projection_, concepts);
    x.bottomRows(projection_.out_dim()) = embeddings;
    return x;
}

Vector ScbmtHead::forward(const Vector& concepts, const Vector& embedding) const {
    return forward_batch(Matrix(concepts), Matrix(embedding)).col(0);
}

Matrix ScbmtHead::forward_batch(const Matrix& concepts, const Matrix& embeddings) const {
    return nn::output_probabilities(loss_for(task_), mlp_.forward(fused(concepts, embeddings)));
}

LossAndGrad ScbmtHead::loss_and_grad(const Matrix& concepts, const Matrix& embeddings,
                                     const Matrix& targets) const {
    const Matrix x = fused(concepts, embeddings);
    nn::Mlp::Trace trace;
    const Matrix logits = mlp_.forward(x, trace);
    const nn::LossResult loss = nn::compute_loss(loss_for(task_), logits, targets);

    LossAndGrad out;
    out.loss = loss.loss;
    out.grads = nn::zeros_like(parameters());
    const Matrix d_x = mlp_.backward(trace, loss.grad_logits, std::span(out.grads).subspan(1));
    const auto top = d_x.topRows(projection_.out_dim());
    out.grads[0].weight = top * concepts.transpose();
    out.grads[0].bias = top.rowwise().sum();
    return out;
}

std::vector<DenseParams*> ScbmtHead::parameters() {
    std::vector<DenseParams*> out{&projection_};
    for (auto& l : mlp_.layers()) out.push_back(&l);
    return out;
}

std::vector<const DenseParams*> ScbmtHead::parameters() const {
    std::vector<const DenseParams*> out{&projection_};
    for (const auto& l : mlp_.layers()) out.push_back(&l);
    return out;
}

// --- prediction -------------------------------------------------------------------

ModelKind parse_model_kind(std::string_view s) {
    if (s == "scbm" || s == "SCBM") return ModelKind::scbm;
    if (s == "scbmt" || s == "SCBMT") return ModelKind::scbmt;
    throw ConfigError("unknown model '" + std::string(s) + "' (scbm|scbmt)");
}

std::string to_string(ModelKind kind) { return kind == ModelKind::scbm ? "scbm" : "scbmt"; }

ModelKind kind_of(const Head& head) {
    return std::holds_alternative<ScbmHead>(head) ? ModelKind::scbm : ModelKind::scbmt;
}

Task task_of(const Head& head) {
    return std::visit([](const auto& h) { return h.task(); }, head);
}

Prediction decide(const Vector& probabilities, Task task, const DecisionRule& rule) {
    if (static_cast<std::size_t>(probabilities.size()) != output_arity(task)) {
        throw ConfigError("model output has " + std::to_string(probabilities.size()) +
                          " entries, task " + task_id(task) + " needs " +
                          std::to_string(output_arity(task)));
    }
    if (task_kind(task) == TaskKind::multilabel) {
        std::vector<int> labels;
        for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
            if (probabilities(i) >= rule.multilabel_threshold) labels.push_back(static_cast<int>(i));
        }
        return {HardLabel{std::move(labels)}, probabilities};
    }
    const double top = probabilities.maxCoeff();
    int best = -1;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        if (probabilities(i) != top) continue;
        if (best < 0) best = static_cast<int>(i);
        if (task_kind(task) == TaskKind::binary && static_cast<int>(i) == rule.binary_tie_class) {
            best = static_cast<int>(i);
            break;
        }
    }
    return {HardLabel{best}, probabilities};
}

std::vector<Prediction> predict(const Head& head, const Matrix& concepts, const Matrix* embeddings,
                                Task task, const DecisionRule& rule) {
    const Matrix probs = std::visit(
        [&](const auto& h) -> Matrix {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, ScbmHead>) {
                return h.forward_batch(concepts).probabilities;
            } else {
                if (embeddings == nullptr) throw ConfigError("SCBMT prediction needs embeddings");
                return h.forward_batch(concepts, *embeddings);
            }
        },
        head);
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(probs.cols()));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) out.push_back(decide(probs.col(j), task, rule));
    return out;
}

// --- embeddings ---------------------------------------------------------------------

Matrix EmbeddingTable::gather(const std::vector<std::string>& ids) const {
    Matrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(ids.size()));
    std::vector<std::string> missing;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const auto it = vectors.find(ids[j]);
        if (it == vectors.end()) {
            missing.push_back(ids[j]);
            continue;
        }
        out.col(static_cast<Eigen::Index>(j)) = it->second;
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        throw JoinError(std::to_string(missing.size()) + " instance(s) have no embedding: " + list,
                        std::move(missing));
    }
    return out;
}

EmbeddingTable parse_embeddings(std::string_view contents) {
    EmbeddingTable table;
    const auto lines = text::split(contents, '\n');
    if (lines.empty() || lines[0].rfind("#scbm-embeddings v1", 0) != 0) {
        throw InvalidInput("embedding file must start with '#scbm-embeddings v1 dim=<n> provider=<tag>'");
    }
    for (const auto& field : text::split(lines[0], ' ')) {
        if (field.rfind("dim=", 0) == 0) table.dim = static_cast<std::size_t>(std::stoul(field.substr(4)));
        if (field.rfind("provider=", 0) == 0) table.provider_tag = field.substr(9);
    }
    if (table.dim == 0) throw InvalidInput("embedding header must declare dim=<n> with n > 0");

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        const auto cells = text::split(lines[i], '\t');
        if (cells.size() != table.dim + 1) {
            throw ShapeError("embedding for '" + cells[0] + "' has " + std::to_string(cells.size() - 1) +
                             " values, header declares " + std::to_string(table.dim));
        }
        Vector v(static_cast<Eigen::Index>(table.dim));
        for (std::size_t k = 0; k < table.dim; ++k) {
            v(static_cast<Eigen::Index>(k)) = text::parse_double(cells[k + 1]);
        }
        if (!v.allFinite()) throw InvalidInput("embedding for '" + cells[0] + "' has non-finite values");
        if (!table.vectors.emplace(cells[0], std::move(v)).second) {
            throw InvalidInput("duplicate embedding id '" + cells[0] + "'");
        }
    }
    return table;
}

EmbeddingTable load_embeddings(const std::string& path) { return parse_embeddings(text::read_file(path)); }

std::string export_embeddings(const EmbeddingTable& table) {
    std::string out = "#scbm-embeddings v1 dim=" + std::to_string(table.dim) +
                      " provider=" + table.provider_tag + "\n";
    for (const auto& [id, v] : table.vectors) {
        out += id;
        for (Eigen::Index k = 0; k < v.size(); ++k) out += "\t" + text::format_double(v(k));
        out += "\n";
    }
    return out;
}

}  // namespace scbm
