#include "scbm/explain.hpp"

#include <algorithm>
#include <numeric>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

Vector concept_column(const ConceptVector& v, const ConceptLexicon& lexicon) {
    if (!v.lexicon_version.empty() && v.lexicon_version != lexicon.version()) {
        throw ConfigError("concept vector '" + v.instance_id + "' uses lexicon '" + v.lexicon_version +
                          "', checkpoint uses '" + lexicon.version() + "'");
    }
    if (v.scores.size() != lexicon.size()) {
        throw ShapeError("concept vector '" + v.instance_id + "' has " + std::to_string(v.scores.size()) +
                         " scores, lexicon has " + std::to_string(lexicon.size()));
    }
    return Eigen::Map<const Vector>(v.scores.data(), static_cast<Eigen::Index>(v.scores.size()));
}

std::string label_text(const HardLabel& label, Task task) {
    const auto& universe = label_universe(task);
    if (const int* c = std::get_if<int>(&label)) return universe[static_cast<std::size_t>(*c)];
    std::string out;
    for (const int l : std::get<std::vector<int>>(label)) {
        if (!out.empty()) out += "+";
        out += universe[static_cast<std::size_t>(l)];
    }
    return out.empty() ? "NONE" : out;
}

std::string adjective_list(const std::vector<RankedConcept>& ranked, std::size_t k) {
    std::string out;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (i) out += ", ";
        out += ranked[i].adjective;
    }
    return out;
}

std::string md_cell(std::string_view s) {
    std::string out;
    for (const char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n' || c == '\r') out += ' ';
        else out += c;
    }
    return out;
}

std::string one_line(std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string render_table(const Table& t, ReportFormat format) {
    std::string out;
    switch (format) {
        case ReportFormat::csv: {
            const auto line = [&](const std::vector<std::string>& cells) {
                for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + text::csv_field(cells[i]);
                out += "\n";
            };
            line(t.header);
            for (const auto& r : t.rows) line(r);
            break;
        }
        case ReportFormat::markdown: {
            const auto line = [&](const std::vector<std::string>& cells) {
                out += "|";
                for (const auto& c : cells) out += " " + md_cell(c) + " |";
                out += "\n";
            };
            line(t.header);
            out += "|";
            for (std::size_t i = 0; i < t.header.size(); ++i) out += " --- |";
            out += "\n";
            for (const auto& r : t.rows) line(r);
            break;
        }
        case ReportFormat::text: {
            for (const auto& r : t.rows) {
                for (std::size_t i = 0; i < r.size(); ++i) out += t.header[i] + ": " + one_line(r[i]) + "\n";
                out += "\n";
            }
            break;
        }
    }
    return out;
}

}  // namespace

std::vector<RankedConcept> rank_concepts(const ConceptLexicon& lexicon, const Vector& activation) {
    if (static_cast<std::size_t>(activation.size()) != lexicon.size()) {
        throw ShapeError("activation length does not match the lexicon");
    }
    std::vector<std::size_t> order(lexicon.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return activation(static_cast<Eigen::Index>(a)) > activation(static_cast<Eigen::Index>(b));
    });
    std::vector<RankedConcept> out;
    out.reserve(order.size());
    for (const auto i : order) out.push_back({lexicon[i], i, activation(static_cast<Eigen::Index>(i))});
    return out;
}

LocalExplanation explain_instance(const Checkpoint& checkpoint, const ConceptVector& vector, std::size_t k,
                                  bool concept_branch, const Vector* embedding) {
    const ConceptLexicon& lexicon = checkpoint.lexicon;
    if (k == 0 || k > lexicon.size()) {
        throw InvalidInput("k must lie in [1, " + std::to_string(lexicon.size()) + "]");
    }
    const Task task = task_of(checkpoint.head);
    const DecisionRule rule{checkpoint.multilabel_threshold, 0};
    const Vector c = concept_column(vector, lexicon);

    LocalExplanation ex;
    ex.instance_id = vector.instance_id;
    ex.task = task;
    Vector activation;
    if (const auto* scbm = std::get_if<ScbmHead>(&checkpoint.head)) {
        const ScbmHead::Output out = scbm->forward(c);
        ex.predicted = decide(out.probabilities, task, rule).label;
        activation = out.activation;
    } else {
        if (!concept_branch) {
            throw Unsupported("SCBMT heads have no relevance gate; request concept-branch explanations explicitly");
        }
        if (embedding == nullptr) throw ConfigError("SCBMT explanations need the instance embedding");
        const auto& head = std::get<ScbmtHead>(checkpoint.head);
        ex.predicted = decide(head.forward(c, *embedding), task, rule).label;
        activation = c;
        ex.concept_branch = true;
    }
    ex.ranked = rank_concepts(lexicon, activation);
    ex.ranked.resize(k);
    return ex;
}

GlobalResult explain_global(const Checkpoint& checkpoint, const std::vector<ConceptVector>& vectors,
                            const std::vector<HardLabel>& gold, bool include_negative, const std::string& lang) {
    const auto* head = std::get_if<ScbmHead>(&checkpoint.head);
    if (head == nullptr) throw Unsupported("global explanations need an SCBM checkpoint");
    if (vectors.size() != gold.size()) throw InputError("explain_global: vector and label counts differ");
    const Task task = head->task();
    const DecisionRule rule{checkpoint.multilabel_threshold, 0};
    const std::size_t classes = output_arity(task);
    const std::size_t dim = checkpoint.lexicon.size();

    std::vector<Vector> sums(classes, Vector::Zero(static_cast<Eigen::Index>(dim)));
    std::vector<std::size_t> support(classes, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const ScbmHead::Output out = head->forward(concept_column(vectors[i], checkpoint.lexicon));
        const HardLabel pred = decide(out.probabilities, task, rule).label;
        if (task_kind(task) == TaskKind::multilabel) {
            const auto& p = hard_set(pred);
            for (const int l : hard_set(gold[i])) {
                if (std::find(p.begin(), p.end(), l) == p.end()) continue;
                sums[static_cast<std::size_t>(l)] += out.activation;
                ++support[static_cast<std::size_t>(l)];
            }
        } else {
            const int g = hard_class(gold[i]);
            if (hard_class(pred) != g) continue;
            sums[static_cast<std::size_t>(g)] += out.activation;
            ++support[static_cast<std::size_t>(g)];
        }
    }

    GlobalResult result;
    const auto negative = negative_class(task);
    for (std::size_t c = 0; c < classes; ++c) {
        if (!include_negative && negative && static_cast<int>(c) == *negative) continue;
        const std::string& name = label_universe(task)[c];
        if (support[c] == 0) {
            result.omitted.push_back(name);
            continue;
        }
        GlobalExplanation g;
        g.task = task;
        g.class_index = static_cast<int>(c);
        g.label = name;
        g.lang = lang;
        g.support = support[c];
        g.ranked = rank_concepts(checkpoint.lexicon, sums[c] / static_cast<double>(support[c]));
        result.classes.push_back(std::move(g));
    }
    return result;
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    if (s == "text" || s == "txt") return ReportFormat::text;
    throw ConfigError("unknown report format '" + std::string(s) + "' (csv|markdown|text)");
}

std::string render_report(const std::vector<LocalExplanation>& explanations, ReportFormat format, std::size_t k) {
    if (explanations.empty()) throw InvalidInput("no local explanations to report");
    Table t{{"lang", "task", "class", "text", "adjectives"}, {}};
    for (const auto& e : explanations) {
        t.rows.push_back({e.lang, task_id(e.task), label_text(e.predicted, e.task), e.text,
                          adjective_list(e.ranked, k)});
    }
    return render_table(t, format);
}

std::string render_report(const std::vector<GlobalExplanation>& explanations, ReportFormat format, std::size_t k) {
    if (explanations.empty()) throw InvalidInput("no global explanations to report");
    Table t{{"lang", "task", "class", "adjectives"}, {}};
    for (const auto& e : explanations) {
        t.rows.push_back({e.lang, task_id(e.task), e.label, adjective_list(e.ranked, k)});
    }
    return render_table(t, format);
}

}  // namespace scbm
