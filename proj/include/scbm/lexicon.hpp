#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scbm/task.hpp"

namespace scbm {

inline constexpr std::string_view kDefaultLexiconTag = "exist2025-default";

// Ordered list of adjective concepts. Index i is concept dimension i of every
// concept vector built against this lexicon. Immutable once constructed.
class ConceptLexicon {
public:
    ConceptLexicon() = default;

    // Deduplicates `concepts` by normalized form (first occurrence wins) and
    // drops blank entries. Duplicates are logged.
    ConceptLexicon(std::vector<std::string> concepts, std::string version);

    const std::vector<std::string>& concepts() const noexcept { return concepts_; }
    const std::string& version() const noexcept { return version_; }
    std::size_t size() const noexcept { return concepts_.size(); }
    bool empty() const noexcept { return concepts_.empty(); }
    const std::string& operator[](std::size_t i) const { return concepts_[i]; }

    std::optional<std::size_t> index_of(std::string_view adjective) const;
    bool contains(std::string_view adjective) const { return index_of(adjective).has_value(); }

    friend bool operator==(const ConceptLexicon&, const ConceptLexicon&) = default;

private:
    std::vector<std::string> concepts_;
    std::string version_;
};

// `source` is either the built-in tag "exist2025-default" or a path to a
// UTF-8 file with one adjective per line. '#' starts a comment; a comment of
// the form "# version: <tag>" sets the lexicon version. Files without one get
// "file-<first 12 hex digits of sha256 over the normalized entries>".
ConceptLexicon load_lexicon(const std::string& source);

ConceptLexicon parse_lexicon(std::string_view contents, std::string fallback_version = {});

std::string serialize_lexicon(const ConceptLexicon& lexicon);

// a's entries first, then b's entries not already present.
ConceptLexicon merge_lexicons(const ConceptLexicon& a, const ConceptLexicon& b);

// Raw text of the built-in lexicon data file.
std::string_view default_lexicon_text();

struct LexiconPromptSpec {
    Task task;
    std::string rendered_prompt;
};

// The prompt that asks an LLM for 50 class-distinguishing adjectives for one
// subtask.
LexiconPromptSpec render_generation_prompt(Task task);
LexiconPromptSpec render_generation_prompt(std::string_view task_id);

}  // namespace scbm
