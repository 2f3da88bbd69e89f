#include "scbm/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "scbm/error.hpp"

namespace scbm {
namespace {

ClassScores class_scores(std::string label, std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassScores s;
    s.label = std::move(label);
    s.support = tp + fn;
    const auto ratio = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            s.zero_division = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    s.f1 = ratio(2 * tp, 2 * tp + fp + fn);
    return s;
}

F1Report finish(std::vector<ClassScores> per_class) {
    F1Report r;
    double sum = 0.0;
    for (const auto& c : per_class) {
        sum += c.f1;
        r.zero_division = r.zero_division || c.zero_division;
    }
    r.macro_f1 = per_class.empty() ? 0.0 : sum / static_cast<double>(per_class.size());
    r.per_class = std::move(per_class);
    return r;
}

void check_label(int label, std::size_t classes) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
        throw InputError("label index " + std::to_string(label) + " outside the label universe");
    }
}

}  // namespace

F1Report f1_report(const std::vector<int>& predictions, const std::vector<int>& gold,
                   const std::vector<std::string>& universe) {
    if (predictions.size() != gold.size()) {
        throw InputError("macro-F1: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(gold.size()) + " gold labels");
    }
    const std::size_t k = universe.size();
    std::vector<std::size_t> tp(k), fp(k), fn(k);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        check_label(predictions[i], k);
        check_label(gold[i], k);
        const auto p = static_cast<std::size_t>(predictions[i]);
        const auto g = static_cast<std::size_t>(gold[i]);
        if (p == g) {
            ++tp[p];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }
    std::vector<ClassScores> per_class;
    for (std::size_t c = 0; c < k; ++c) per_class.push_back(class_scores(universe[c], tp[c], fp[c], fn[c]));
    return finish(std::move(per_class));
}

F1Report f1_report(const std::vector<std::vector<int>>& predictions,
                   const std::vector<std::vector<int>>& gold, const std::vector<std::string>& universe) {
    if (predictions.size() != gold.size()) {
        throw InputError("macro-F1: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(gold.size()) + " gold label sets");
    }
    const std::size_t k = universe.size();
    std::vector<std::size_t> tp(k), fp(k), fn(k);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        std::vector<char> in_p(k, 0), in_g(k, 0);
        for (int l : predictions[i]) {
            check_label(l, k);
            in_p[static_cast<std::size_t>(l)] = 1;
        }
        for (int l : gold[i]) {
            check_label(l, k);
            in_g[static_cast<std::size_t>(l)] = 1;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (in_p[c] && in_g[c]) ++tp[c];
            else if (in_p[c]) ++fp[c];
            else if (in_g[c]) ++fn[c];
        }
    }
    std::vector<ClassScores> per_class;
    for (std::size_t c = 0; c < k; ++c) per_class.push_back(class_scores(universe[c], tp[c], fp[c], fn[c]));
    return finish(std::move(per_class));
}

F1Report f1_report(const std::vector<HardLabel>& predictions, const std::vector<HardLabel>& gold, Task task) {
    if (task_kind(task) == TaskKind::multilabel) {
        std::vector<std::vector<int>> p, g;
        for (const auto& l : predictions) p.push_back(hard_set(l));
        for (const auto& l : gold) g.push_back(hard_set(l));
        return f1_report(p, g, label_universe(task));
    }
    std::vector<int> p, g;
    for (const auto& l : predictions) p.push_back(hard_class(l));
    for (const auto& l : gold) g.push_back(hard_class(l));
    return f1_report(p, g, label_universe(task));
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& gold, std::size_t classes) {
    std::vector<std::string> names(classes);
    return f1_report(predictions, gold, names).macro_f1;
}

double macro_f1(const std::vector<HardLabel>& predictions, const std::vector<HardLabel>& gold, Task task) {
    return f1_report(predictions, gold, task).macro_f1;
}

double soft_cross_entropy(const std::vector<std::vector<double>>& predictions,
                          const std::vector<std::vector<double>>& gold, double eps) {
    if (predictions.size() != gold.size()) throw InputError("cross-entropy: instance count mismatch");
    if (gold.empty()) throw InputError("cross-entropy: no instances");
    double total = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i].size() != gold[i].size()) {
            throw InputError("cross-entropy: arity mismatch at instance " + std::to_string(i));
        }
        for (std::size_t c = 0; c < gold[i].size(); ++c) {
            if (gold[i][c] == 0.0) continue;
            total -= gold[i][c] * std::log(std::max(predictions[i][c], eps));
        }
    }
    return total / static_cast<double>(gold.size());
}

double multilabel_cross_entropy(const std::vector<std::vector<double>>& predictions,
                                const std::vector<std::vector<double>>& gold, double eps) {
    if (predictions.size() != gold.size()) throw InputError("cross-entropy: instance count mismatch");
    if (gold.empty()) throw InputError("cross-entropy: no instances");
    double total = 0.0;
    std::size_t terms = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i].size() != gold[i].size()) {
            throw InputError("cross-entropy: arity mismatch at instance " + std::to_string(i));
        }
        for (std::size_t c = 0; c < gold[i].size(); ++c) {
            const double g = gold[i][c];
            const double p = predictions[i][c];
            if (g != 0.0) total -= g * std::log(std::max(p, eps));
            if (g != 1.0) total -= (1.0 - g) * std::log(std::max(1.0 - p, eps));
            ++terms;
        }
    }
    return terms == 0 ? 0.0 : total / static_cast<double>(terms);
}

EvalResult evaluate(Task task, const std::vector<EvalInstance>& instances) {
    if (instances.empty()) throw InputError("evaluate: no instances");
    std::vector<HardLabel> pred, gold;
    std::vector<std::vector<double>> probs, soft;
    for (const auto& inst : instances) {
        pred.push_back(inst.predicted);
        gold.push_back(inst.gold.hard);
        probs.push_back(inst.probabilities);
        soft.push_back(inst.gold.soft.distribution);
    }
    const F1Report f1 = f1_report(pred, gold, task);
    EvalResult r;
    r.task = task;
    r.macro_f1 = f1.macro_f1;
    r.per_class = f1.per_class;
    r.zero_division = f1.zero_division;
    r.n = instances.size();
    r.cross_entropy = task_kind(task) == TaskKind::multilabel ? multilabel_cross_entropy(probs, soft)
                                                                : soft_cross_entropy(probs, soft);
    return r;
}

std::string metrics_report_json(const std::map<std::string, EvalResult>& groups) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [name, r] : groups) {
        nlohmann::json classes = nlohmann::json::array();
        for (const auto& c : r.per_class) {
            classes.push_back({{"label", c.label},
                               {"precision", c.precision},
                               {"recall", c.recall},
                               {"f1", c.f1},
                               {"support", c.support},
                               {"zero_division", c.zero_division}});
        }
        doc[name] = {{"task", task_id(r.task)},
                     {"n", r.n},
                     {"macro_f1", r.macro_f1},
                     {"cross_entropy", r.cross_entropy},
                     {"zero_division", r.zero_division},
                     {"per_class", std::move(classes)}};
    }
    return doc.dump(2) + "\n";
}

std::string submission_json(const std::vector<SubmissionRecord>& records, Task task, bool soft,
                            const std::string& test_case) {
    const auto& universe = label_universe(task);
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& rec : records) {
        nlohmann::ordered_json value;
        if (soft) {
            if (rec.probabilities.size() != universe.size()) {
                throw InputError("submission: distribution for '" + rec.id + "' has the wrong arity");
            }
            value = nlohmann::ordered_json::object();
            for (std::size_t c = 0; c < universe.size(); ++c) {
                value[submission_label(task, static_cast<int>(c))] = rec.probabilities[c];
            }
        } else if (task_kind(task) == TaskKind::multilabel) {
            value = nlohmann::ordered_json::array();
            for (int l : hard_set(rec.label)) value.push_back(submission_label(task, l));
            if (value.empty()) value.push_back("NO");
        } else {
            value = submission_label(task, hard_class(rec.label));
        }
        out.push_back({{"test_case", test_case}, {"id", rec.id}, {"value", std::move(value)}});
    }
    return out.dump(2) + "\n";
}

}  // namespace scbm
