#include "scbm/dataset.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

#include "scbm/error.hpp"
#include "scbm/random.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

using json = nlohmann::ordered_json;

enum class ViolationKind { schema, count };

struct Violation {
    ViolationKind kind;
    std::string message;
};

const json* find_path(const json& record, const std::string& path) {
    const json* node = &record;
    for (const auto& part : text::split(path, '.')) {
        if (!node->is_object()) return nullptr;
        const auto it = node->find(part);
        if (it == node->end()) return nullptr;
        node = &*it;
    }
    return node;
}

std::string scalar_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return text::format_double(v.get<double>());
    throw InvalidInput("expected a string");
}

class RecordReader {
public:
    RecordReader(const json& record, std::string label, std::vector<Violation>& out)
        : record_(record), label_(std::move(label)), out_(out) {}

    const json* require(const std::string& path) {
        const json* v = find_path(record_, path);
        if (v == nullptr || v->is_null()) {
            fail(ViolationKind::schema, "missing field '" + path + "'");
            return nullptr;
        }
        return v;
    }

    std::optional<std::string> string_field(const std::string& path) {
        const json* v = require(path);
        if (v == nullptr) return std::nullopt;
        try {
            return scalar_string(*v);
        } catch (const InvalidInput&) {
            fail(ViolationKind::schema, "field '" + path + "' must be a string");
            return std::nullopt;
        }
    }

    // Per-annotator array; length is checked separately.
    const json* array_field(const std::string& path) {
        const json* v = require(path);
        if (v == nullptr) return nullptr;
        if (!v->is_array()) {
            fail(ViolationKind::schema, "field '" + path + "' must be an array");
            return nullptr;
        }
        if (v->size() != kAnnotatorsPerPost) {
            fail(ViolationKind::count, "field '" + path + "' has " + std::to_string(v->size()) +
                                           " annotations, expected 6");
            return nullptr;
        }
        return v;
    }

    void fail(ViolationKind kind, const std::string& msg) {
        out_.push_back({kind, "record " + label_ + ": " + msg});
        ok_ = false;
    }

    void set_label(std::string label) { label_ = std::move(label); }
    bool ok() const { return ok_; }

private:
    const json& record_;
    std::string label_;
    std::vector<Violation>& out_;
    bool ok_ = true;
};

std::optional<AnnotatedPost> read_post(const json& record, std::size_t ordinal,
                                       const FieldMapping& m, std::vector<Violation>& violations) {
    RecordReader r(record, "#" + std::to_string(ordinal), violations);
    if (!record.is_object()) {
        r.fail(ViolationKind::schema, "record is not an object");
        return std::nullopt;
    }

    AnnotatedPost post;
    if (auto id = r.string_field(m.id)) {
        post.id = *id;
        r.set_label("'" + post.id + "'");
    }
    if (auto lang = r.string_field(m.lang)) {
        try {
            post.lang = parse_lang(*lang);
        } catch (const InvalidInput& e) {
            r.fail(ViolationKind::schema, e.what());
        }
    }
    if (auto t = r.string_field(m.text)) post.text = *t;

    post.annotations.resize(kAnnotatorsPerPost);
    const auto fill_strings = [&](const std::string& path, auto setter) {
        if (path.empty()) return;
        const json* arr = r.array_field(path);
        if (arr == nullptr) return;
        for (std::size_t i = 0; i < kAnnotatorsPerPost; ++i) {
            try {
                setter(post.annotations[i], scalar_string((*arr)[i]));
            } catch (const InvalidInput& e) {
                r.fail(ViolationKind::schema,
                       "field '" + path + "[" + std::to_string(i) + "]': " + e.what());
            }
        }
    };

    fill_strings(m.annotator_ids, [](Annotation& a, std::string v) { a.annotator_id = std::move(v); });
    fill_strings(m.gender, [](Annotation& a, std::string v) { a.profile.gender = std::move(v); });
    fill_strings(m.age, [](Annotation& a, std::string v) { a.profile.age_group = std::move(v); });
    fill_strings(m.ethnicity, [](Annotation& a, std::string v) { a.profile.ethnicity = std::move(v); });
    fill_strings(m.education, [](Annotation& a, std::string v) { a.profile.education = std::move(v); });
    fill_strings(m.country, [](Annotation& a, std::string v) { a.profile.country = std::move(v); });
    fill_strings(m.task1, [](Annotation& a, std::string v) {
        a.identification = parse_label(Task::identification, v);
    });
    fill_strings(m.task2, [](Annotation& a, std::string v) {
        a.intention = parse_label(Task::intention, v);
    });

    if (!m.task3.empty()) {
        if (const json* arr = r.array_field(m.task3)) {
            for (std::size_t i = 0; i < kAnnotatorsPerPost; ++i) {
                const json& entry = (*arr)[i];
                std::vector<int> labels;
                try {
                    const auto add = [&](const json& v) {
                        if (auto idx = parse_label(Task::categorization, scalar_string(v))) {
                            labels.push_back(*idx);
                        }
                    };
                    if (entry.is_array()) {
                        for (const auto& v : entry) add(v);
                    } else {
                        add(entry);
                    }
                    std::sort(labels.begin(), labels.end());
                    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
                    post.annotations[i].categories = std::move(labels);
                } catch (const InvalidInput& e) {
                    r.fail(ViolationKind::schema,
                           "field '" + m.task3 + "[" + std::to_string(i) + "]': " + e.what());
                }
            }
        }
    }

    if (!r.ok()) return std::nullopt;
    return post;
}

std::vector<json> records_of(const std::string& contents) {
    std::vector<json> records;
    const std::string trimmed = text::trim(contents);
    if (trimmed.empty()) return records;

    json whole;
    bool parsed = false;
    try {
        whole = json::parse(trimmed);
        parsed = true;
    } catch (const json::parse_error&) {
    }

    if (parsed && whole.is_array()) {
        for (auto& r : whole) records.push_back(std::move(r));
        return records;
    }
    if (parsed && whole.is_object()) {
        const bool keyed = !whole.empty() &&
                           std::all_of(whole.begin(), whole.end(),
                                       [](const json& v) { return v.is_object(); });
        if (keyed) {
            for (auto& [key, value] : whole.items()) records.push_back(value);
        } else {
            records.push_back(std::move(whole));
        }
        return records;
    }

    std::size_t line_no = 0;
    for (const auto& line : text::split(trimmed, '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw SchemaError("dataset line " + std::to_string(line_no) + " is not valid JSON",
                              {std::string("line ") + std::to_string(line_no) + ": " + e.what()});
        }
    }
    return records;
}

int count_votes(const AnnotatedPost& post, auto pred) {
    return static_cast<int>(std::count_if(post.annotations.begin(), post.annotations.end(), pred));
}

void require_labels(const AnnotatedPost& post, Task task) {
    if (post.annotations.size() != kAnnotatorsPerPost) {
        throw AnnotationCountError("post '" + post.id + "' has " +
                                       std::to_string(post.annotations.size()) +
                                       " annotations, expected 6",
                                   {post.id});
    }
    if (!post.has_labels(task)) {
        throw InvalidInput("post '" + post.id + "' has no labels for task " + task_id(task));
    }
}

}  // namespace

bool AnnotatedPost::has_labels(Task task) const {
    return std::all_of(annotations.begin(), annotations.end(), [task](const Annotation& a) {
        switch (task) {
            case Task::identification: return a.identification.has_value();
            case Task::intention: return a.intention.has_value();
            case Task::categorization: return a.categories.has_value();
        }
        return false;
    });
}

FieldMapping FieldMapping::from_json_text(const std::string& json_text) {
    FieldMapping m;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("field mapping is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("field mapping must be a JSON object");
    const std::vector<std::pair<std::string, std::string*>> slots{
        {"id", &m.id},
        {"lang", &m.lang},
        {"text", &m.text},
        {"annotator_ids", &m.annotator_ids},
        {"gender", &m.gender},
        {"age", &m.age},
        {"ethnicity", &m.ethnicity},
        {"education", &m.education},
        {"country", &m.country},
        {"task1", &m.task1},
        {"task2", &m.task2},
        {"task3", &m.task3},
    };
    for (auto& [key, value] : j.items()) {
        const auto it = std::find_if(slots.begin(), slots.end(),
                                     [&](const auto& s) { return s.first == key; });
        if (it == slots.end()) throw ConfigError("unknown field mapping key '" + key + "'");
        if (value.is_null()) {
            *it->second = "";
        } else if (value.is_string()) {
            *it->second = value.get<std::string>();
        } else {
            throw ConfigError("field mapping key '" + key + "' must be a string or null");
        }
    }
    return m;
}

std::vector<AnnotatedPost> parse_dataset(const std::string& contents, const FieldMapping& mapping) {
    const std::vector<json> records = records_of(contents);
    std::vector<AnnotatedPost> posts;
    std::vector<Violation> violations;
    posts.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (auto post = read_post(records[i], i, mapping, violations)) posts.push_back(std::move(*post));
    }
    if (!violations.empty()) {
        std::vector<std::string> messages;
        for (const auto& v : violations) messages.push_back(v.message);
        std::string what = std::to_string(violations.size()) + " dataset violation(s); first: " +
                           violations.front().message;
        if (violations.front().kind == ViolationKind::count) {
            throw AnnotationCountError(what, std::move(messages));
        }
        throw SchemaError(what, std::move(messages));
    }
    return posts;
}

std::vector<AnnotatedPost> ingest_dataset(const std::string& path, const FieldMapping& mapping) {
    auto posts = parse_dataset(text::read_file(path), mapping);
    spdlog::info("ingested {} posts from {}", posts.size(), path);
    return posts;
}

Targets derive_targets(const AnnotatedPost& post, Task task) {
    require_labels(post, task);
    const double n = static_cast<double>(kAnnotatorsPerPost);

    switch (task) {
        case Task::identification: {
            const int sexist = count_votes(post, [](const Annotation& a) { return *a.identification == 0; });
            const int other = static_cast<int>(kAnnotatorsPerPost) - sexist;
            return {{task, {sexist / n, other / n}}, HardLabel{sexist >= 3 ? 0 : 1}};
        }
        case Task::intention: {
            std::vector<int> votes(label_universe(task).size(), 0);
            for (const auto& a : post.annotations) ++votes[static_cast<std::size_t>(*a.intention)];
            std::vector<double> soft;
            for (const int v : votes) soft.push_back(v / n);
            const int negative = *negative_class(task);
            int best = -1;
            for (int c = 0; c < static_cast<int>(votes.size()); ++c) {
                if (c == negative) continue;
                if (best < 0 || votes[c] > votes[best]) best = c;
            }
            if (votes[negative] > votes[best]) best = negative;
            return {{task, std::move(soft)}, HardLabel{best}};
        }
        case Task::categorization: {
            std::vector<int> votes(label_universe(task).size(), 0);
            for (const auto& a : post.annotations) {
                for (const int l : *a.categories) ++votes[static_cast<std::size_t>(l)];
            }
            std::vector<double> soft;
            std::vector<int> hard;
            for (std::size_t l = 0; l < votes.size(); ++l) {
                soft.push_back(votes[l] / n);
                if (votes[l] > 3) hard.push_back(static_cast<int>(l));
            }
            if (hard.empty()) {
                bool sexist = false;
                if (post.has_labels(Task::identification)) {
                    sexist = count_votes(post, [](const Annotation& a) { return *a.identification == 0; }) >= 3;
                } else {
                    sexist = count_votes(post, [](const Annotation& a) { return !a.categories->empty(); }) >= 3;
                }
                const auto top = std::max_element(votes.begin(), votes.end());
                if (sexist && *top > 0) hard.push_back(static_cast<int>(top - votes.begin()));
            }
            return {{task, std::move(soft)}, HardLabel{std::move(hard)}};
        }
    }
    throw InvalidTask("unknown task");
}

Targets annotator_targets(const Annotation& a, Task task) {
    const std::size_t k = label_universe(task).size();
    std::vector<double> soft(k, 0.0);
    switch (task) {
        case Task::identification:
        case Task::intention: {
            const auto& label = task == Task::identification ? a.identification : a.intention;
            if (!label) throw InvalidInput("annotation has no label for task " + task_id(task));
            soft[static_cast<std::size_t>(*label)] = 1.0;
            return {{task, std::move(soft)}, HardLabel{*label}};
        }
        case Task::categorization: {
            if (!a.categories) throw InvalidInput("annotation has no labels for task 1.3");
            for (const int l : *a.categories) soft[static_cast<std::size_t>(l)] = 1.0;
            return {{task, std::move(soft)}, HardLabel{*a.categories}};
        }
    }
    throw InvalidTask("unknown task");
}

int hard_class(const HardLabel& label) {
    if (const int* c = std::get_if<int>(&label)) return *c;
    throw InvalidInput("expected a single-class label");
}

const std::vector<int>& hard_set(const HardLabel& label) {
    if (const auto* s = std::get_if<std::vector<int>>(&label)) return *s;
    throw InvalidInput("expected a label set");
}

UndersampleResult undersample(const std::vector<AnnotatedPost>& posts, Task task,
                              int target_class, std::uint64_t seed) {
    if (task_kind(task) == TaskKind::multilabel) {
        throw ConfigError("undersampling is defined for single-label tasks only");
    }
    const std::size_t classes = label_universe(task).size();
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= classes) {
        throw InvalidInput("undersampling target class out of range");
    }

    std::vector<std::size_t> counts(classes, 0);
    std::vector<std::size_t> target_positions;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const int c = hard_class(derive_targets(posts[i], task).hard);
        ++counts[static_cast<std::size_t>(c)];
        if (c == target_class) target_positions.push_back(i);
    }

    UndersampleResult result;
    const std::string& name = label_universe(task)[static_cast<std::size_t>(target_class)];
    std::size_t cap = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (static_cast<int>(c) != target_class) cap = std::max(cap, counts[c]);
    }
    if (target_positions.empty() || cap == 0) {
        result.no_op = true;
        result.warning = target_positions.empty()
                             ? "undersampling: class " + name + " absent, nothing removed"
                             : "undersampling: no other class present, nothing removed";
        spdlog::warn("{}", result.warning);
        result.posts = posts;
        return result;
    }
    if (target_positions.size() <= cap) {
        result.posts = posts;
        return result;
    }

    Rng rng(seed);
    std::vector<std::size_t> pool = target_positions;
    for (std::size_t i = 0; i < cap; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<bool> keep(posts.size(), true);
    for (const std::size_t pos : target_positions) keep[pos] = false;
    for (std::size_t i = 0; i < cap; ++i) keep[pool[i]] = true;

    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (keep[i]) result.posts.push_back(posts[i]);
    }
    spdlog::info("undersampling: {} {} -> {}", name, target_positions.size(), cap);
    return result;
}

SplitManifest parse_splits(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("splits manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("splits manifest must map split names to id arrays");
    SplitManifest splits;
    for (auto& [name, ids] : j.items()) {
        if (!ids.is_array()) throw ConfigError("split '" + name + "' must be an array of ids");
        auto& out = splits[name];
        for (const auto& id : ids) out.push_back(scalar_string(id));
    }
    return splits;
}

SplitManifest load_splits(const std::string& path) { return parse_splits(text::read_file(path)); }

}  // namespace scbm
