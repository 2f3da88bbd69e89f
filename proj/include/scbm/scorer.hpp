#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scbm/dataset.hpp"
#include "scbm/lexicon.hpp"
#include "scbm/persona.hpp"
#include "scbm/vectors.hpp"

namespace scbm {

class ScoringBackend;
class ScoreCache;

// One yes/no relevance question for one (adjective, text, persona).
struct ScoringPrompt {
    std::string adjective;
    std::string text;
    std::optional<std::string> persona_prefix;
    std::string body;

    // Text sent to the endpoint: "<persona>. <body>" or just the body.
    std::string rendered() const;
};

// Throws InvalidInput on an empty adjective or text.
ScoringPrompt build_prompt(std::string_view adjective, std::string_view text,
                           const std::optional<AnnotatorProfile>& persona = std::nullopt);

enum class MatchPolicy { exact, fold_case_and_trim };

// Tokens counted as the start of an affirmative answer. Under
// fold_case_and_trim a token is trimmed of whitespace and tokenizer word
// markers ('_', U+2581, U+0120) and case folded before lookup, so "Yes"
// covers " yes", "_yes" and "YES".
class AffirmativeTokenSet {
public:
    AffirmativeTokenSet(std::vector<std::string> tokens, MatchPolicy policy);

    // {"Yes", "Si", "Sí"} under fold_case_and_trim.
    static AffirmativeTokenSet standard();

    bool matches(std::string_view token) const;
    MatchPolicy policy() const noexcept { return policy_; }
    const std::set<std::string>& tokens() const noexcept { return tokens_; }

    // Stable description of the set, folded into cache keys.
    std::string signature() const;

private:
    std::string key(std::string_view token) const;

    std::set<std::string> tokens_;
    MatchPolicy policy_;
};

// Top-k first-token distribution reported by an endpoint. Mass outside the
// reported entries is unknown and counts as non-affirmative.
struct TokenDistribution {
    std::vector<std::pair<std::string, double>> entries;
    int truncation_k = 0;

    static TokenDistribution from_logprobs(const std::vector<std::pair<std::string, double>>& logprobs,
                                           int truncation_k);
};

// Sum of the probabilities of affirmative entries, clamped to [0, 1].
// `clamped` is set when the raw sum fell outside that range.
double marginal_affirmative_score(const TokenDistribution& dist, const AffirmativeTokenSet& affirm,
                                  bool* clamped = nullptr);

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
};

struct ScoringOptions {
    AffirmativeTokenSet affirmative = AffirmativeTokenSet::standard();
    int top_k = 20;
    RetryPolicy retry;
    int max_in_flight = 4;
};

struct ScoringStats {
    std::size_t prompts = 0;
    std::size_t cache_hits = 0;
    std::size_t backend_requests = 0;  // including retries
    std::size_t clamped = 0;
};

ConceptVector score_text(std::string_view instance_id, std::string_view text,
                         const ConceptLexicon& lexicon,
                         const std::optional<AnnotatorProfile>& persona,
                         std::optional<std::string> persona_id, ScoringBackend& backend,
                         ScoreCache& cache, const ScoringOptions& options = {},
                         ScoringStats* stats = nullptr);

enum class PersonaMode { none, per_annotator };

PersonaMode parse_persona_mode(std::string_view s);
std::string to_string(PersonaMode mode);

// Persona id used for annotator i of a post: the annotator id when present,
// otherwise "a<i>".
std::string persona_id_for(const AnnotatedPost& post, std::size_t annotator);

// One vector per post (none) or six per post (per_annotator), in post order.
// Cached prompts are never re-sent; new scores are written through to the
// cache as they arrive, and the cache is flushed before any error escapes.
std::vector<ConceptVector> score_corpus(const std::vector<AnnotatedPost>& posts,
                                        const ConceptLexicon& lexicon, PersonaMode mode,
                                        ScoringBackend& backend, ScoreCache& cache,
                                        const ScoringOptions& options = {},
                                        ScoringStats* stats = nullptr);

}  // namespace scbm
