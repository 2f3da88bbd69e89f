#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbm/dataset.hpp"
#include "scbm/lexicon.hpp"

namespace scbm {

struct SyntheticOptions {
    std::size_t posts = 500;
    std::size_t train = 400;  // the rest go to "dev"
    // Required gap between the summed mock scores of the first and second
    // half of the lexicon: >= margin for SEXIST posts, <= -margin otherwise.
    double margin = 2.0;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    std::vector<AnnotatedPost> posts;
    SplitManifest splits;
};

// Task 1.1 corpus whose persona-free mock-backend concept vectors are
// linearly separable with the margin above. Texts are found by rejection
// sampling over a seeded nonce; classes alternate and all six annotators
// agree. Languages alternate EN/ES.
SyntheticCorpus make_separable_corpus(const ConceptLexicon& lexicon, const SyntheticOptions& options = {});

// Signed half-lexicon score gap of `text` under the mock backend.
double mock_margin(const ConceptLexicon& lexicon, const std::string& text);

// EXIST-layout JSON object keyed by post id, readable by ingest_dataset with
// the default field mapping.
std::string dataset_json(const std::vector<AnnotatedPost>& posts);
std::string splits_json(const SplitManifest& splits);

}  // namespace scbm
