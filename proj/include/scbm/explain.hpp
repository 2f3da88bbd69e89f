#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scbm/checkpoint.hpp"
#include "scbm/dataset.hpp"
#include "scbm/vectors.hpp"

namespace scbm {

struct RankedConcept {
    std::string adjective;
    std::size_t index = 0;  // lexicon position
    double activation = 0.0;
};

// Ranked by activation, ties by lexicon index.
std::vector<RankedConcept> rank_concepts(const ConceptLexicon& lexicon, const Vector& activation);

struct LocalExplanation {
    std::string instance_id;
    Task task = Task::identification;
    HardLabel predicted;
    std::vector<RankedConcept> ranked;  // length k
    // Report context, filled by the caller when known.
    std::string lang;
    std::string text;
    // SCBMT: ranked values are the raw concept-branch inputs, not gated
    // activations.
    bool concept_branch = false;
};

// SCBM: ranks the gated activation r. SCBMT heads have no gate and throw
// Unsupported unless `concept_branch` is set, in which case the concept
// vector entering the projection is ranked and `embedding` is required for
// the predicted label.
LocalExplanation explain_instance(const Checkpoint& checkpoint, const ConceptVector& vector,
                                  std::size_t k = 10, bool concept_branch = false,
                                  const Vector* embedding = nullptr);

struct GlobalExplanation {
    Task task = Task::identification;
    int class_index = 0;
    std::string label;
    std::string lang = "ALL";
    std::vector<RankedConcept> ranked;  // every concept, mean activation
    std::size_t support = 0;
};

struct GlobalResult {
    std::vector<GlobalExplanation> classes;
    std::vector<std::string> omitted;  // classes with no correctly classified instance
};

// Per class: mean gated activation over instances whose gold label is that
// class and which the checkpoint classifies correctly. For the multilabel task
// an instance counts for label l when both gold and prediction contain l.
// The NON-SEXIST class is skipped unless `include_negative`.
GlobalResult explain_global(const Checkpoint& checkpoint, const std::vector<ConceptVector>& vectors,
                            const std::vector<HardLabel>& gold, bool include_negative = false,
                            const std::string& lang = "ALL");

enum class ReportFormat { csv, markdown, text };
ReportFormat parse_report_format(std::string_view s);

// Columns: lang, task, class, text (local only), adjectives (top k, comma
// joined). Byte-stable for fixed input. Throws InvalidInput on empty input.
std::string render_report(const std::vector<LocalExplanation>& explanations, ReportFormat format,
                          std::size_t k = 10);
std::string render_report(const std::vector<GlobalExplanation>& explanations, ReportFormat format,
                          std::size_t k = 10);

}  // namespace scbm
