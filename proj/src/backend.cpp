#include "scbm/backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {

using json = nlohmann::json;

double MockBackend::yes_probability(std::string_view adjective, std::string_view text,
                                    std::string_view persona_prefix) {
    std::string bytes;
    bytes.reserve(adjective.size() + text.size() + persona_prefix.size() + 2);
    bytes.append(adjective);
    bytes.push_back('\x1F');
    bytes.append(text);
    bytes.push_back('\x1F');
    bytes.append(persona_prefix);
    const std::uint64_t h = text::fnv1a64(bytes);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

TokenDistribution MockBackend::fetch(const ScoringPrompt& prompt, int top_k) {
    const double p = yes_probability(prompt.adjective, prompt.text, prompt.persona_prefix.value_or(""));
    return TokenDistribution{{{"Yes", p}, {"No", 1.0 - p}}, top_k};
}

CompletionApi parse_completion_api(std::string_view s) {
    if (s == "completions") return CompletionApi::completions;
    if (s == "chat") return CompletionApi::chat;
    throw ConfigError("unknown completion api '" + std::string(s) + "' (completions|chat)");
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("backend base_url must start with http:// or https://");
    }
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += config_.api == CompletionApi::chat ? "/chat/completions" : "/completions";
    if (config_.model_id.empty()) throw ConfigError("backend model_id is required");
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const ScoringPrompt& prompt, int top_k) const {
    json body{{"model", config_.model_id}, {"max_tokens", 1}, {"temperature", 0}};
    if (config_.api == CompletionApi::chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", prompt.rendered()}}});
        body["logprobs"] = true;
        body["top_logprobs"] = top_k;
    } else {
        body["prompt"] = prompt.rendered();
        body["logprobs"] = top_k;
    }
    return body.dump();
}

TokenDistribution HttpBackend::parse_reply(CompletionApi api, std::string_view body, int top_k) {
    json reply;
    try {
        reply = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("endpoint reply is not JSON: ") + e.what());
    }
    std::vector<std::pair<std::string, double>> logprobs;
    try {
        const json& choice = reply.at("choices").at(0);
        const json& lp = choice.at("logprobs");
        if (api == CompletionApi::chat) {
            for (const auto& entry : lp.at("content").at(0).at("top_logprobs")) {
                logprobs.emplace_back(entry.at("token").get<std::string>(),
                                      entry.at("logprob").get<double>());
            }
        } else {
            for (const auto& [token, value] : lp.at("top_logprobs").at(0).items()) {
                logprobs.emplace_back(token, value.get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("endpoint reply lacks first-token logprobs: ") + e.what());
    }
    if (logprobs.empty()) throw ProtocolError("endpoint reply has an empty logprob list");
    for (const auto& [token, lp] : logprobs) {
        if (!(lp <= 0.0)) throw ProtocolError("logprob for token '" + token + "' is not <= 0");
    }
    return TokenDistribution::from_logprobs(logprobs, top_k);
}

TokenDistribution HttpBackend::fetch(const ScoringPrompt& prompt, int top_k) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.auth_token.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.auth_token);
    }
    const auto res = client.Post(path_, headers, request_body(prompt, top_k), "application/json");
    if (!res) {
        throw BackendError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 408 || res->status == 429 || res->status >= 500) {
        throw BackendError("endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ProtocolError("endpoint returned HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 200));
    }
    return parse_reply(config_.api, res->body, top_k);
}

}  // namespace scbm
