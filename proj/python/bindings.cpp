#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "scbm/backend.hpp"
#include "scbm/cache.hpp"
#include "scbm/checkpoint.hpp"
#include "scbm/cli.hpp"
#include "scbm/error.hpp"
#include "scbm/explain.hpp"
#include "scbm/metrics.hpp"
#include "scbm/scorer.hpp"

namespace py = pybind11;
using namespace scbm;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

py::object label_to_python(const HardLabel& label) {
    if (const int* c = std::get_if<int>(&label)) return py::int_(*c);
    return py::cast(std::get<std::vector<int>>(label));
}

// Python side works with one instance per row; the core uses columns.
class Model {
public:
    explicit Model(Checkpoint ck) : ck_(std::move(ck)) {}

    static Model load(const std::string& path) { return Model(load_checkpoint(path)); }

    std::string task() const { return task_id(task_of(ck_.head)); }
    std::string kind() const { return to_string(kind_of(ck_.head)); }
    std::vector<std::string> labels() const { return label_universe(task_of(ck_.head)); }
    const std::vector<std::string>& concepts() const { return ck_.lexicon.concepts(); }

    RowMatrix predict_proba(const RowMatrix& concepts, const std::optional<RowMatrix>& embeddings) const {
        const auto preds = run(concepts, embeddings);
        RowMatrix out(static_cast<Eigen::Index>(preds.size()),
                      static_cast<Eigen::Index>(output_arity(task_of(ck_.head))));
        for (std::size_t i = 0; i < preds.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = preds[i].probabilities;
        return out;
    }

    py::list predict(const RowMatrix& concepts, const std::optional<RowMatrix>& embeddings) const {
        py::list out;
        for (const auto& p : run(concepts, embeddings)) out.append(label_to_python(p.label));
        return out;
    }

    std::vector<std::pair<std::string, double>> explain(const std::vector<double>& concepts, std::size_t k) const {
        const ConceptVector v{"python", std::nullopt, concepts, ck_.lexicon.version()};
        std::vector<std::pair<std::string, double>> out;
        for (const auto& r : explain_instance(ck_, v, k).ranked) out.emplace_back(r.adjective, r.activation);
        return out;
    }

private:
    std::vector<Prediction> run(const RowMatrix& concepts, const std::optional<RowMatrix>& embeddings) const {
        const Matrix c = concepts.transpose();
        std::optional<Matrix> e;
        if (embeddings) e = embeddings->transpose();
        return scbm::predict(ck_.head, c, e ? &*e : nullptr, task_of(ck_.head),
                             DecisionRule{ck_.multilabel_threshold, 0});
    }

    Checkpoint ck_;
};

RowMatrix score_texts(const std::vector<std::string>& texts, const ConceptLexicon& lexicon,
                      const std::optional<std::string>& cache_path, int max_in_flight) {
    std::vector<AnnotatedPost> posts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        AnnotatedPost p;
        p.id = "py" + std::to_string(i);
        p.text = texts[i];
        posts.push_back(std::move(p));
    }
    MockBackend backend;
    ScoreCache cache = cache_path ? ScoreCache(*cache_path) : ScoreCache();
    ScoringOptions opts;
    opts.max_in_flight = max_in_flight;
    std::vector<ConceptVector> rows;
    {
        py::gil_scoped_release release;
        rows = score_corpus(posts, lexicon, PersonaMode::none, backend, cache, opts);
    }
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(lexicon.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < lexicon.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].scores[j];
        }
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Concept-bottleneck sexism classifier core";

    py::register_exception<Error>(m, "ScbmError", PyExc_RuntimeError);
    // Registered later, so tried first.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });

    py::class_<ConceptLexicon>(m, "Lexicon")
        .def(py::init([](const std::string& source) { return load_lexicon(source); }),
             py::arg("source") = std::string(kDefaultLexiconTag))
        .def(py::init<std::vector<std::string>, std::string>(), py::arg("concepts"), py::arg("version"))
        .def_property_readonly("concepts", &ConceptLexicon::concepts)
        .def_property_readonly("version", &ConceptLexicon::version)
        .def("index_of", &ConceptLexicon::index_of)
        .def("__len__", &ConceptLexicon::size)
        .def("__getitem__",
             [](const ConceptLexicon& l, std::size_t i) {
                 if (i >= l.size()) throw py::index_error();
                 return l[i];
             })
        .def("__repr__", [](const ConceptLexicon& l) {
            return "<Lexicon " + l.version() + " with " + std::to_string(l.size()) + " concepts>";
        });

    m.def("mock_yes_probability", &MockBackend::yes_probability, py::arg("adjective"), py::arg("text"),
          py::arg("persona") = "");
    m.def("score_texts", &score_texts, py::arg("texts"), py::arg("lexicon"), py::arg("cache_path") = py::none(),
          py::arg("max_in_flight") = 4,
          "Concept vectors (one row per text) from the deterministic mock backend.");

    m.def("macro_f1", py::overload_cast<const std::vector<int>&, const std::vector<int>&, std::size_t>(&macro_f1),
          py::arg("predictions"), py::arg("gold"), py::arg("classes"));
    m.def("soft_cross_entropy", &soft_cross_entropy, py::arg("predictions"), py::arg("gold"), py::arg("eps") = 1e-7);

    py::class_<Model>(m, "Model")
        .def_static("load", &Model::load, py::arg("path"))
        .def_property_readonly("task", &Model::task)
        .def_property_readonly("kind", &Model::kind)
        .def_property_readonly("labels", &Model::labels)
        .def_property_readonly("concepts", &Model::concepts)
        .def("predict_proba", &Model::predict_proba, py::arg("concepts"), py::arg("embeddings") = py::none())
        .def("predict", &Model::predict, py::arg("concepts"), py::arg("embeddings") = py::none())
        .def("explain", &Model::explain, py::arg("concepts"), py::arg("k") = 10);

    m.def(
        "run",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "scbm");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            py::gil_scoped_release release;
            return cli::run(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Runs the command-line tool in process and returns its exit code.");
}
