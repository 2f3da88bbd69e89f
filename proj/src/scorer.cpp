#include "scbm/scorer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iterator>
#include <mutex>
#include <span>
#include <thread>

#include "scbm/backend.hpp"
#include "scbm/cache.hpp"
#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {

std::string ScoringPrompt::rendered() const {
    if (persona_prefix) return *persona_prefix + ". " + body;
    return body;
}

ScoringPrompt build_prompt(std::string_view adjective, std::string_view text,
                           const std::optional<AnnotatorProfile>& persona) {
    if (text::trim(adjective).empty()) throw InvalidInput("scoring prompt needs a non-empty adjective");
    if (text::trim(text).empty()) throw InvalidInput("scoring prompt needs a non-empty text");
    ScoringPrompt p;
    p.adjective = std::string(adjective);
    p.text = std::string(text);
    if (persona) p.persona_prefix = render_persona(*persona);
    p.body = "Tell me if the adjective " + p.adjective +
             " describes the content of the following text: " + p.text + "?";
    return p;
}

// --- affirmative tokens -------------------------------------------------------

AffirmativeTokenSet::AffirmativeTokenSet(std::vector<std::string> tokens, MatchPolicy policy)
    : policy_(policy) {
    for (const auto& t : tokens) {
        std::string k = key(t);
        if (!k.empty()) tokens_.insert(std::move(k));
    }
    if (tokens_.empty()) throw InvalidInput("affirmative token set must not be empty");
}

AffirmativeTokenSet AffirmativeTokenSet::standard() {
    return AffirmativeTokenSet({"Yes", "Si", "Sí"}, MatchPolicy::fold_case_and_trim);
}

std::string AffirmativeTokenSet::key(std::string_view token) const {
    if (policy_ == MatchPolicy::exact) return std::string(token);
    std::string t = text::trim(token);
    // Word-boundary markers used by common tokenizers: '_', U+2581, U+0120.
    bool stripped = true;
    while (stripped && !t.empty()) {
        stripped = false;
        if (t[0] == '_') {
            t.erase(0, 1);
            stripped = true;
        } else if (t.rfind("\xE2\x96\x81", 0) == 0) {
            t.erase(0, 3);
            stripped = true;
        } else if (t.rfind("\xC4\xA0", 0) == 0) {
            t.erase(0, 2);
            stripped = true;
        }
        if (stripped) t = text::trim(t);
    }
    return text::fold_case(t);
}

bool AffirmativeTokenSet::matches(std::string_view token) const { return tokens_.contains(key(token)); }

std::string AffirmativeTokenSet::signature() const {
    std::string sig = policy_ == MatchPolicy::exact ? "exact:" : "fold:";
    bool first = true;
    for (const auto& t : tokens_) {
        if (!first) sig += '|';
        sig += t;
        first = false;
    }
    return sig;
}

TokenDistribution TokenDistribution::from_logprobs(
    const std::vector<std::pair<std::string, double>>& logprobs, int truncation_k) {
    TokenDistribution d;
    d.truncation_k = truncation_k;
    d.entries.reserve(logprobs.size());
    for (const auto& [token, lp] : logprobs) d.entries.emplace_back(token, std::exp(lp));
    return d;
}

double marginal_affirmative_score(const TokenDistribution& dist, const AffirmativeTokenSet& affirm,
                                  bool* clamped) {
    double sum = 0.0;
    for (const auto& [token, p] : dist.entries) {
        if (affirm.matches(token)) sum += p;
    }
    const double out = std::clamp(sum, 0.0, 1.0);
    if (clamped != nullptr) *clamped = out != sum;
    return out;
}

// --- scoring ------------------------------------------------------------------

PersonaMode parse_persona_mode(std::string_view s) {
    if (s == "none") return PersonaMode::none;
    if (s == "per_annotator") return PersonaMode::per_annotator;
    throw ConfigError("unknown persona mode '" + std::string(s) + "' (none|per_annotator)");
}

std::string to_string(PersonaMode mode) {
    return mode == PersonaMode::none ? "none" : "per_annotator";
}

std::string persona_id_for(const AnnotatedPost& post, std::size_t annotator) {
    const auto& id = post.annotations.at(annotator).annotator_id;
    return id.empty() ? "a" + std::to_string(annotator) : id;
}

namespace {

struct Job {
    std::size_t row;
    std::size_t concept_index;
    ScoringPrompt prompt;
    CacheKey key;
};

struct RowSpec {
    std::string instance_id;
    std::optional<std::string> persona_id;
    const std::string* text;
    std::optional<AnnotatorProfile> persona;
};

double fetch_with_retry(ScoringBackend& backend, const ScoringPrompt& prompt,
                        const ScoringOptions& options, std::atomic<std::size_t>& requests,
                        std::atomic<std::size_t>& clamps, const std::atomic<bool>& abort) {
    auto delay = options.retry.initial_backoff;
    const int attempts = std::max(1, options.retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            ++requests;
            const TokenDistribution dist = backend.first_token_distribution(prompt, options.top_k);
            bool clamped = false;
            const double score = marginal_affirmative_score(dist, options.affirmative, &clamped);
            if (clamped) {
                ++clamps;
                spdlog::warn("affirmative mass outside [0,1] clamped for adjective '{}'",
                             prompt.adjective);
            }
            return score;
        } catch (const BackendError& e) {
            if (attempt >= attempts || abort.load()) throw;
            spdlog::warn("backend request failed (attempt {}/{}): {}", attempt, attempts, e.what());
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(delay.count()) * options.retry.multiplier));
        }
    }
}

// Scores all_rows[begin, end). Progress counts include the rows before `begin`.
std::vector<ConceptVector> score_rows(const std::vector<RowSpec>& all_rows, std::size_t begin,
                                      std::size_t end, const ConceptLexicon& lexicon,
                                      ScoringBackend& backend, ScoreCache& cache,
                                      const ScoringOptions& options, ScoringStats* stats) {
    const std::span<const RowSpec> rows(all_rows.data() + begin, end - begin);
    const std::string model = backend.model_id();
    const std::string affirm_sig = options.affirmative.signature();

    std::vector<ConceptVector> out(rows.size());
    std::vector<Job> jobs;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out[r].instance_id = rows[r].instance_id;
        out[r].persona_id = rows[r].persona_id;
        out[r].lexicon_version = lexicon.version();
        out[r].scores.assign(lexicon.size(), 0.0);
        for (std::size_t c = 0; c < lexicon.size(); ++c) {
            ScoringPrompt prompt = build_prompt(lexicon[c], *rows[r].text, rows[r].persona);
            const CacheKey key = make_cache_key(model, lexicon.version(), affirm_sig, prompt.rendered());
            if (const auto cached = cache.get(key)) {
                out[r].scores[c] = *cached;
                ++hits;
            } else {
                jobs.push_back({r, c, std::move(prompt), key});
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> requests{0};
    std::atomic<std::size_t> clamps{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            Job& job = jobs[i];
            try {
                const double score = fetch_with_retry(backend, job.prompt, options, requests, clamps, abort);
                out[job.row].scores[job.concept_index] = score;
                cache.put(job.key, score);
                ++done;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.max_in_flight)), jobs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    if (stats != nullptr) {
        stats->prompts += rows.size() * lexicon.size();
        stats->cache_hits += hits;
        stats->backend_requests += requests.load();
        stats->clamped += clamps.load();
    }

    if (failure) {
        cache.flush();
        const std::size_t total = all_rows.size() * lexicon.size();
        const std::size_t completed = begin * lexicon.size() + hits + done.load();
        try {
            std::rethrow_exception(failure);
        } catch (const BackendError& e) {
            throw BackendUnavailable(std::string("backend unavailable after retries: ") + e.what() +
                                         " (" + std::to_string(completed) + "/" +
                                         std::to_string(total) + " prompts scored and cached)",
                                     completed, total);
        }
    }
    if (!jobs.empty()) cache.flush();
    return out;
}

}  // namespace

ConceptVector score_text(std::string_view instance_id, std::string_view text,
                         const ConceptLexicon& lexicon,
                         const std::optional<AnnotatorProfile>& persona,
                         std::optional<std::string> persona_id, ScoringBackend& backend,
                         ScoreCache& cache, const ScoringOptions& options, ScoringStats* stats) {
    const std::string body(text);
    std::vector<RowSpec> rows{{std::string(instance_id), std::move(persona_id), &body, persona}};
    return std::move(score_rows(rows, 0, 1, lexicon, backend, cache, options, stats).front());
}

std::vector<ConceptVector> score_corpus(const std::vector<AnnotatedPost>& posts,
                                        const ConceptLexicon& lexicon, PersonaMode mode,
                                        ScoringBackend& backend, ScoreCache& cache,
                                        const ScoringOptions& options, ScoringStats* stats) {
    if (posts.empty()) throw InvalidInput("score_corpus needs at least one post");
    if (lexicon.empty()) throw EmptyLexicon("score_corpus needs a non-empty lexicon");

    std::vector<RowSpec> rows;
    for (const auto& post : posts) {
        if (mode == PersonaMode::none) {
            rows.push_back({post.id, std::nullopt, &post.text, std::nullopt});
            continue;
        }
        if (post.annotations.size() != kAnnotatorsPerPost) {
            throw AnnotationCountError("post '" + post.id + "' needs six annotator profiles",
                                       {post.id});
        }
        for (std::size_t a = 0; a < kAnnotatorsPerPost; ++a) {
            rows.push_back({post.id, persona_id_for(post, a), &post.text, post.annotations[a].profile});
        }
    }
    // Bounded chunks keep the pending prompt list small on large corpora.
    constexpr std::size_t kChunkRows = 256;
    std::vector<ConceptVector> out;
    out.reserve(rows.size());
    for (std::size_t begin = 0; begin < rows.size(); begin += kChunkRows) {
        const std::size_t end = std::min(rows.size(), begin + kChunkRows);
        auto chunk = score_rows(rows, begin, end, lexicon, backend, cache, options, stats);
        std::move(chunk.begin(), chunk.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace scbm
