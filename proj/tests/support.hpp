#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scbm/dataset.hpp"
#include "scbm/lexicon.hpp"

namespace scbm::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 gen{std::random_device{}()};
        path_ = fs::temp_directory_path() / ("scbm-" + tag + "-" + std::to_string(gen()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline AnnotatorProfile profile(int i) {
    static const char* genders[] = {"F", "M"};
    static const char* ages[] = {"18-22", "23-45", "46+"};
    return {genders[i % 2], ages[i % 3], "White or Caucasian", "Bachelor's degree", "Spain"};
}

// Post with six annotators; `sexist_votes` of them say SEXIST (task 1.1),
// intention and category labels are filled from the given per-annotator lists
// when non-empty.
inline AnnotatedPost make_post(const std::string& id, int sexist_votes, Lang lang = Lang::en,
                               std::vector<int> intention = {}, std::vector<std::vector<int>> categories = {}) {
    AnnotatedPost p;
    p.id = id;
    p.lang = lang;
    p.text = "text of " + id;
    for (int a = 0; a < 6; ++a) {
        Annotation ann;
        ann.annotator_id = id + "_ann" + std::to_string(a);
        ann.profile = profile(a);
        ann.identification = a < sexist_votes ? 0 : 1;
        ann.intention = intention.empty() ? (a < sexist_votes ? 0 : 3) : intention[static_cast<std::size_t>(a)];
        ann.categories = categories.empty() ? std::vector<int>{} : categories[static_cast<std::size_t>(a)];
        p.annotations.push_back(std::move(ann));
    }
    return p;
}

inline ConceptLexicon small_lexicon(std::size_t n, const std::string& version = "test-lex") {
    std::vector<std::string> c;
    for (std::size_t i = 0; i < n; ++i) c.push_back("adj" + std::to_string(i));
    return ConceptLexicon(c, version);
}

}  // namespace scbm::testing
