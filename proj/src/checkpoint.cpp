#include "scbm/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

using json = nlohmann::ordered_json;

// Doubles are stored as strings so that non-finite optimizer state, -0.0 and
// every mantissa bit survive regardless of the JSON library's number policy.
json tensor_json(const Matrix& m) {
    json values = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(text::format_double(m(r, c)));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

Matrix tensor_from(const json& j, const std::string& where) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto& values = j.at("values");
        if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(values.size()) != rows * cols) {
            throw ShapeError("checkpoint tensor " + where + " has inconsistent shape");
        }
        Matrix m(rows, cols);
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = text::parse_double(values[i++].get<std::string>());
        }
        return m;
    } catch (const json::exception& e) {
        throw InvalidInput("checkpoint tensor " + where + ": " + e.what());
    }
}

json dense_json(const DenseParams& p) {
    return {{"weight", tensor_json(p.weight)}, {"bias", tensor_json(Matrix(p.bias))}};
}

DenseParams dense_from(const json& j, const std::string& where) {
    DenseParams p;
    p.weight = tensor_from(j.at("weight"), where + ".weight");
    const Matrix b = tensor_from(j.at("bias"), where + ".bias");
    if (b.cols() != 1 || b.rows() != p.weight.rows()) throw ShapeError("checkpoint bias " + where + " has wrong shape");
    p.bias = b.col(0);
    return p;
}

json dense_list(const std::vector<const DenseParams*>& params) {
    json out = json::array();
    for (const auto* p : params) out.push_back(dense_json(*p));
    return out;
}

json dense_list(const std::vector<DenseParams>& params) {
    json out = json::array();
    for (const auto& p : params) out.push_back(dense_json(p));
    return out;
}

std::vector<DenseParams> dense_list_from(const json& j, const std::string& where) {
    std::vector<DenseParams> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(dense_from(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
    const ModelKind kind = kind_of(ck.head);
    const auto params = std::visit([](const auto& h) { return h.parameters(); }, ck.head);
    json doc;
    doc["format"] = "scbm-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["kind"] = to_string(kind);
    doc["task"] = task_id(task_of(ck.head));
    doc["lexicon"] = {{"version", ck.lexicon.version()}, {"concepts", ck.lexicon.concepts()}};
    doc["seed"] = std::to_string(ck.seed);
    doc["multilabel_threshold"] = text::format_double(ck.multilabel_threshold);
    // First entry is the gate (SCBM) or the projection (SCBMT); the rest are
    // MLP layers in forward order.
    doc["layers"] = dense_list(params);
    doc["optimizer"] = {{"name", "rmsprop"},
                        {"learning_rate", text::format_double(ck.optimizer.config.learning_rate)},
                        {"decay", text::format_double(ck.optimizer.config.decay)},
                        {"epsilon", text::format_double(ck.optimizer.config.epsilon)},
                        {"accumulators", dense_list(ck.optimizer.accumulators)}};
    json meta = json::object();
    for (const auto& [k, v] : ck.metadata) meta[k] = v;
    doc["metadata"] = std::move(meta);
    return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& contents) {
    json doc;
    try {
        doc = json::parse(contents);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format") != "scbm-checkpoint") throw InvalidInput("not an scbm checkpoint");
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw Unsupported("checkpoint version " + doc.at("version").dump() + " is not supported");
        }
        Checkpoint ck;
        const ModelKind kind = parse_model_kind(doc.at("kind").get<std::string>());
        const Task task = parse_task(doc.at("task").get<std::string>());
        ck.lexicon = ConceptLexicon(doc.at("lexicon").at("concepts").get<std::vector<std::string>>(),
                                    doc.at("lexicon").at("version").get<std::string>());
        ck.seed = std::stoull(doc.at("seed").get<std::string>());
        ck.multilabel_threshold = text::parse_double(doc.at("multilabel_threshold").get<std::string>());

        std::vector<DenseParams> layers = dense_list_from(doc.at("layers"), "layers");
        if (layers.size() < 2) throw ShapeError("checkpoint needs a front layer and at least one MLP layer");
        DenseParams front = std::move(layers.front());
        layers.erase(layers.begin());
        nn::Mlp mlp(std::move(layers));
        if (kind == ModelKind::scbm) {
            ck.head = ScbmHead(std::move(front), std::move(mlp), task);
        } else {
            ck.head = ScbmtHead(std::move(front), std::move(mlp), task);
        }
        const std::size_t concepts = std::visit([](const auto& h) { return h.concept_count(); }, ck.head);
        if (concepts != ck.lexicon.size()) {
            throw ShapeError("checkpoint head expects " + std::to_string(concepts) + " concepts, lexicon has " +
                             std::to_string(ck.lexicon.size()));
        }

        const auto& opt = doc.at("optimizer");
        ck.optimizer.config.learning_rate = text::parse_double(opt.at("learning_rate").get<std::string>());
        ck.optimizer.config.decay = text::parse_double(opt.at("decay").get<std::string>());
        ck.optimizer.config.epsilon = text::parse_double(opt.at("epsilon").get<std::string>());
        ck.optimizer.accumulators = dense_list_from(opt.at("accumulators"), "optimizer.accumulators");

        for (const auto& [k, v] : doc.at("metadata").items()) ck.metadata[k] = v.get<std::string>();
        return ck;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    text::write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(text::read_file(path)); }

std::string checkpoint_hash(const Checkpoint& checkpoint) {
    return text::sha256_hex(serialize_checkpoint(checkpoint));
}

}  // namespace scbm
