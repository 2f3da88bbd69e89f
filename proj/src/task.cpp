#include "scbm/task.hpp"

#include <algorithm>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {

Task parse_task(std::string_view id) {
    const std::string t = text::trim(id);
    if (t == "1.1" || t == "1_1") return Task::identification;
    if (t == "1.2" || t == "1_2") return Task::intention;
    if (t == "1.3" || t == "1_3") return Task::categorization;
    throw InvalidTask("unknown task id '" + t + "' (expected 1.1, 1.2 or 1.3)");
}

std::string task_id(Task task) {
    switch (task) {
        case Task::identification: return "1.1";
        case Task::intention: return "1.2";
        case Task::categorization: return "1.3";
    }
    return "?";
}

TaskKind task_kind(Task task) {
    switch (task) {
        case Task::identification: return TaskKind::binary;
        case Task::intention: return TaskKind::multiclass;
        case Task::categorization: return TaskKind::multilabel;
    }
    return TaskKind::binary;
}

const std::vector<std::string>& label_universe(Task task) {
    static const std::vector<std::string> identification{"SEXIST", "NON-SEXIST"};
    static const std::vector<std::string> intention{"DIRECT", "JUDGEMENTAL", "REPORTED",
                                                    "NON-SEXIST"};
    static const std::vector<std::string> categorization{
        "IDEOLOGICAL-INEQUALITY", "STEREOTYPING-DOMINANCE", "OBJECTIFICATION",
        "SEXUAL-VIOLENCE", "MISOGYNY-NON-SEXUAL-VIOLENCE"};
    switch (task) {
        case Task::identification: return identification;
        case Task::intention: return intention;
        case Task::categorization: return categorization;
    }
    return identification;
}

std::optional<int> negative_class(Task task) {
    switch (task) {
        case Task::identification: return 1;
        case Task::intention: return 3;
        case Task::categorization: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<int> parse_label(Task task, std::string_view raw) {
    std::string up = text::trim(raw);
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::replace(up.begin(), up.end(), '_', '-');
    std::replace(up.begin(), up.end(), ' ', '-');

    const bool none = up == "-" || up == "NO" || up == "UNKNOWN" || up == "NON-SEXIST" ||
                      up == "NOT-SEXIST";
    switch (task) {
        case Task::identification:
            if (up == "YES" || up == "SEXIST") return 0;
            if (none) return 1;
            break;
        case Task::intention:
            if (none) return 3;
            if (up == "JUDGMENTAL") return 1;
            break;
        case Task::categorization:
            if (none) return std::nullopt;
            break;
    }
    const auto& universe = label_universe(task);
    const auto it = std::find(universe.begin(), universe.end(), up);
    if (it == universe.end()) {
        throw InvalidInput("label '" + std::string(raw) + "' is not in the task " +
                           task_id(task) + " label universe");
    }
    return static_cast<int>(it - universe.begin());
}

std::string submission_label(Task task, int index) {
    if (task == Task::identification) return index == 0 ? "YES" : "NO";
    if (task == Task::intention && index == 3) return "NO";
    return label_universe(task).at(static_cast<std::size_t>(index));
}

Lang parse_lang(std::string_view s) {
    const std::string f = text::fold_case(text::trim(s));
    if (f == "en") return Lang::en;
    if (f == "es") return Lang::es;
    throw InvalidInput("unsupported language tag '" + std::string(s) + "'");
}

std::string lang_code(Lang lang) { return lang == Lang::en ? "EN" : "ES"; }

}  // namespace scbm
