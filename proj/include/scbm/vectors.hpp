#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scbm/lexicon.hpp"

namespace scbm {

// Relevance scores of every lexicon concept for one (instance, persona).
struct ConceptVector {
    std::string instance_id;
    std::optional<std::string> persona_id;
    std::vector<double> scores;
    std::string lexicon_version;

    friend bool operator==(const ConceptVector&, const ConceptVector&) = default;
};

// Tab-separated export:
//   #scbm-vectors v1 lexicon=<version>
//   instance_id<TAB>persona_id<TAB><adjective 0><TAB>...<adjective n-1>
//   <id><TAB><persona or empty><TAB><score>...
// Scores are written in shortest round-trip form, so parsing restores the
// exact doubles.
std::string export_vectors(const std::vector<ConceptVector>& vectors, const ConceptLexicon& lexicon);

struct VectorTable {
    std::string lexicon_version;
    std::vector<std::string> adjectives;
    std::vector<ConceptVector> rows;
};

VectorTable parse_vectors(std::string_view contents);
VectorTable load_vectors(const std::string& path);

}  // namespace scbm
