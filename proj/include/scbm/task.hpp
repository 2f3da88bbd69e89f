#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scbm {

// The three EXIST task-1 subtasks.
enum class Task {
    identification,  // 1.1, binary: SEXIST / NON-SEXIST
    intention,       // 1.2, multiclass: DIRECT / JUDGEMENTAL / REPORTED / NON-SEXIST
    categorization,  // 1.3, multilabel over five categories
};

enum class TaskKind { binary, multiclass, multilabel };

enum class Lang { en, es };

Task parse_task(std::string_view id);  // "1.1", "1.2", "1.3"
std::string task_id(Task task);        // "1.1"
TaskKind task_kind(Task task);

// Canonical class names in output-index order. For the binary task index 0 is
// the positive (SEXIST) class.
const std::vector<std::string>& label_universe(Task task);

// Index of the NON-SEXIST class, if the task has one as an explicit class.
std::optional<int> negative_class(Task task);

// Resolves a canonical or raw dataset label ("YES", "NO", "-", "DIRECT", ...)
// to a class index. Returns nullopt for labels that mean "no class" in the
// multilabel task ("-", "NO", "UNKNOWN").
std::optional<int> parse_label(Task task, std::string_view raw);

// Label names used in benchmark submission files.
std::string submission_label(Task task, int index);

Lang parse_lang(std::string_view s);
std::string lang_code(Lang lang);  // "EN" / "ES"

}  // namespace scbm
