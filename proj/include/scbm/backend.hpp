#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "scbm/scorer.hpp"

namespace scbm {

// Source of first-token distributions. Implementations must be safe to call
// from several threads at once.
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;

    virtual std::string model_id() const = 0;

    // Counts the request, then forwards to fetch(). Throws BackendError for
    // transient failures and ProtocolError for unusable replies.
    TokenDistribution first_token_distribution(const ScoringPrompt& prompt, int top_k) {
        ++requests_;
        return fetch(prompt, top_k);
    }

    std::size_t request_count() const noexcept { return requests_.load(); }

protected:
    virtual TokenDistribution fetch(const ScoringPrompt& prompt, int top_k) = 0;

private:
    std::atomic<std::size_t> requests_{0};
};

// Offline stand-in for an LLM endpoint. For a prompt with adjective A, text T
// and persona prefix P (empty when absent):
//
//   h     = FNV-1a-64(A || 0x1F || T || 0x1F || P)
//   p_yes = (h >> 11) * 2^-53
//
// and the reply is {("Yes", p_yes), ("No", 1 - p_yes)}.
class MockBackend final : public ScoringBackend {
public:
    explicit MockBackend(std::string model_id = "mock-fnv1a-v1") : model_id_(std::move(model_id)) {}

    std::string model_id() const override { return model_id_; }

    static double yes_probability(std::string_view adjective, std::string_view text,
                                  std::string_view persona_prefix);

protected:
    TokenDistribution fetch(const ScoringPrompt& prompt, int top_k) override;

private:
    std::string model_id_;
};

enum class CompletionApi { completions, chat };

struct HttpBackendConfig {
    // e.g. "http://localhost:8000/v1"; the API path is appended.
    std::string base_url;
    std::string model_id;
    CompletionApi api = CompletionApi::completions;
    std::string auth_token;  // sent as a bearer token when non-empty
    std::chrono::seconds timeout{60};
};

// Client for OpenAI-style completion endpoints that return top-k
// log-probabilities for the first generated token.
//
// completions: POST <base>/completions
//   {"model", "prompt", "max_tokens": 1, "temperature": 0, "logprobs": k}
//   reply choices[0].logprobs.top_logprobs[0] = {token: logprob, ...}
// chat: POST <base>/chat/completions
//   {"model", "messages": [{"role": "user", ...}], "max_tokens": 1,
//    "temperature": 0, "logprobs": true, "top_logprobs": k}
//   reply choices[0].logprobs.content[0].top_logprobs = [{token, logprob}, ...]
class HttpBackend final : public ScoringBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    std::string model_id() const override { return config_.model_id; }

    // Builds the request body for one prompt.
    std::string request_body(const ScoringPrompt& prompt, int top_k) const;

    // Extracts the first-token distribution from a reply body.
    static TokenDistribution parse_reply(CompletionApi api, std::string_view body, int top_k);

protected:
    TokenDistribution fetch(const ScoringPrompt& prompt, int top_k) override;

private:
    HttpBackendConfig config_;
    std::string origin_;
    std::string path_;
};

CompletionApi parse_completion_api(std::string_view s);

}  // namespace scbm
