#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scbm/persona.hpp"
#include "scbm/task.hpp"

namespace scbm {

inline constexpr std::size_t kAnnotatorsPerPost = 6;

struct Annotation {
    std::string annotator_id;
    AnnotatorProfile profile;
    std::optional<int> identification;         // task 1.1 class index
    std::optional<int> intention;              // task 1.2 class index
    std::optional<std::vector<int>> categories;  // task 1.3 label set, sorted
};

struct AnnotatedPost {
    std::string id;
    Lang lang = Lang::en;
    std::string text;
    std::vector<Annotation> annotations;  // exactly six

    bool has_labels(Task task) const;
};

// Where each field lives in a dataset record. Names are dotted paths into the
// record object; per-annotator fields are arrays of length six. An empty
// label path means the dataset carries no labels for that task.
struct FieldMapping {
    std::string id = "id_EXIST";
    std::string lang = "lang";
    std::string text = "tweet";
    std::string annotator_ids = "annotators";
    std::string gender = "gender_annotators";
    std::string age = "age_annotators";
    std::string ethnicity = "ethnicities_annotators";
    std::string education = "study_levels_annotators";
    std::string country = "countries_annotators";
    std::string task1 = "labels_task1_1";
    std::string task2 = "labels_task1_2";
    std::string task3 = "labels_task1_3";

    static FieldMapping exist2025() { return {}; }
    // Keys not listed above are rejected.
    static FieldMapping from_json_text(const std::string& json_text);
};

// Accepts JSON lines, a JSON array of records, or a JSON object whose values
// are records (the EXIST export layout). All violations are collected before
// throwing; the exception type follows the first violation.
std::vector<AnnotatedPost> ingest_dataset(const std::string& path,
                                          const FieldMapping& mapping = {});
std::vector<AnnotatedPost> parse_dataset(const std::string& contents,
                                         const FieldMapping& mapping = {});

using HardLabel = std::variant<int, std::vector<int>>;

struct SoftTarget {
    Task task;
    // Class probabilities (1.1/1.2, sums to 1) or per-label vote fractions
    // (1.3). Every entry is a multiple of 1/6.
    std::vector<double> distribution;
};

struct Targets {
    SoftTarget soft;
    HardLabel hard;
};

// Vote fractions plus the majority decision. Ties resolve toward the sexist
// side: 3/6 SEXIST votes give SEXIST; in 1.2 a tie between NON-SEXIST and an
// intention class picks the intention class, ties among intention classes pick
// the lowest index. In 1.3 a label is kept with more than three votes; when
// none qualifies and the post is SEXIST by the 1.1 rule, the single most-voted
// label is kept instead.
Targets derive_targets(const AnnotatedPost& post, Task task);

// Per-annotator target used when training on persona-conditioned vectors.
Targets annotator_targets(const Annotation& annotation, Task task);

int hard_class(const HardLabel& label);
const std::vector<int>& hard_set(const HardLabel& label);

struct UndersampleResult {
    std::vector<AnnotatedPost> posts;
    bool no_op = false;
    std::string warning;
};

// Randomly drops posts whose hard label is `target_class` until that class is
// no larger than the largest other class. Survivors keep their input order.
UndersampleResult undersample(const std::vector<AnnotatedPost>& posts, Task task,
                              int target_class, std::uint64_t seed);

// JSON object mapping split name to an array of post ids.
using SplitManifest = std::map<std::string, std::vector<std::string>>;
SplitManifest load_splits(const std::string& path);
SplitManifest parse_splits(const std::string& json_text);

}  // namespace scbm
