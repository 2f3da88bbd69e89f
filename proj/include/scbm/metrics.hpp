#pragma once

#include <map>
#include <string>
#include <vector>

#include "scbm/dataset.hpp"
#include "scbm/task.hpp"

namespace scbm {

struct ClassScores {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;      // gold count
    bool zero_division = false;   // some ratio had a zero denominator and was set to 0
};

struct F1Report {
    double macro_f1 = 0.0;
    std::vector<ClassScores> per_class;  // full label universe, index order
    bool zero_division = false;
};

// Single-label: classes in [0, classes). Unweighted mean of per-class F1;
// a class absent from both sides contributes 0 and sets the flag.
F1Report f1_report(const std::vector<int>& predictions, const std::vector<int>& gold,
                   const std::vector<std::string>& universe);
// Multilabel: macro over per-label binary F1.
F1Report f1_report(const std::vector<std::vector<int>>& predictions,
                   const std::vector<std::vector<int>>& gold, const std::vector<std::string>& universe);
F1Report f1_report(const std::vector<HardLabel>& predictions, const std::vector<HardLabel>& gold, Task task);

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& gold, std::size_t classes);
double macro_f1(const std::vector<HardLabel>& predictions, const std::vector<HardLabel>& gold, Task task);

// Mean over instances of -sum_c gold_c ln(max(pred_c, eps)); 0 ln 0 = 0.
// Natural log. Throws InputError on length or arity mismatch.
double soft_cross_entropy(const std::vector<std::vector<double>>& predictions,
                          const std::vector<std::vector<double>>& gold, double eps = 1e-7);

// Multilabel variant: mean over instances and labels of the binary
// cross-entropy between gold vote fractions and per-label probabilities.
double multilabel_cross_entropy(const std::vector<std::vector<double>>& predictions,
                                const std::vector<std::vector<double>>& gold, double eps = 1e-7);

struct EvalResult {
    Task task = Task::identification;
    double macro_f1 = 0.0;
    double cross_entropy = 0.0;
    std::vector<ClassScores> per_class;
    std::size_t n = 0;
    bool zero_division = false;
};

// One prediction per instance: hard label plus the model's distribution
// (softmax or per-label sigmoid).
struct EvalInstance {
    HardLabel predicted;
    std::vector<double> probabilities;
    Targets gold;
};

EvalResult evaluate(Task task, const std::vector<EvalInstance>& instances);

// Deterministic JSON, keys sorted, groups in map order (e.g. ALL, EN, ES).
std::string metrics_report_json(const std::map<std::string, EvalResult>& groups);

struct SubmissionRecord {
    std::string id;
    HardLabel label;
    std::vector<double> probabilities;
};

// Benchmark submission shape: a JSON array of
//   {"test_case": <name>, "id": <id>, "value": <label | [labels] | {label: p}>}
// `soft` selects the distribution form.
std::string submission_json(const std::vector<SubmissionRecord>& records, Task task, bool soft,
                            const std::string& test_case = "EXIST2025");

}  // namespace scbm
