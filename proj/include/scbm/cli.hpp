#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scbm/backend.hpp"
#include "scbm/explain.hpp"
#include "scbm/training.hpp"

namespace scbm::cli {

namespace fs = std::filesystem;

struct BackendSettings {
    std::string kind = "mock";  // mock | http
    std::string base_url;
    std::string model_id;       // empty: backend default
    CompletionApi api = CompletionApi::completions;
    std::string token_env = "SCBM_API_TOKEN";  // the token itself is never read from the config
    int top_k = 20;
    int max_in_flight = 4;
    int timeout_seconds = 60;
    RetryPolicy retry;
};

struct ExplainSettings {
    std::size_t k = 10;
    ReportFormat format = ReportFormat::csv;
    bool include_negative = false;
    bool concept_branch = false;
    std::string split = "train";      // global explanations aggregate over this split
    std::vector<std::string> instances;  // local explanations; empty: every post of `local_split`
    std::string local_split = "dev";
};

// Every relative path is resolved against the config file's directory.
struct RunConfig {
    fs::path config_path;
    fs::path dataset;
    fs::path splits;
    std::string lexicon = "exist2025-default";  // built-in tag or resolved path
    std::optional<fs::path> field_mapping;
    std::optional<fs::path> embeddings;
    std::optional<fs::path> cache;       // default: <output_dir>/score-cache.bin
    std::optional<fs::path> vectors;     // default: <output_dir>/vectors.<persona_mode>.tsv
    std::optional<fs::path> checkpoint;  // default: <output_dir>/checkpoint.json
    fs::path output_dir;

    BackendSettings backend;
    TrainConfig train;
    ExplainSettings explain;
    std::string eval_split = "dev";
    std::uint64_t seed = 0;

    fs::path cache_path() const;
    fs::path vectors_path() const;
    fs::path checkpoint_path() const;
};

// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> persona_mode;
    std::optional<std::string> task;
    std::optional<std::string> model;
    std::optional<std::string> split;
};

// Rejects unknown keys, a missing seed and paths that do not exist
// (ConfigError). Model-specific training defaults fill unset train keys.
RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir,
                           const Overrides& overrides = {});
RunConfig load_run_config(const fs::path& path, const Overrides& overrides = {});

// Canonical JSON echo of the effective configuration (no secrets).
std::string config_echo_json(const RunConfig& config);

std::unique_ptr<ScoringBackend> make_backend(const BackendSettings& settings);

struct CommandResult {
    std::string summary;               // printed on stdout
    std::vector<fs::path> outputs;     // files written
};

// `backend` overrides the configured backend (tests).
CommandResult cmd_score(const RunConfig& config, ScoringBackend* backend = nullptr);
CommandResult cmd_train(const RunConfig& config);
CommandResult cmd_predict(const RunConfig& config);
CommandResult cmd_explain(const RunConfig& config, bool global);
CommandResult cmd_evaluate(const RunConfig& config);

// Full command-line entry point; returns the process exit code
// (0 ok, 1 user or config error, 2 backend or IO error).
int run(int argc, const char* const* argv);

}  // namespace scbm::cli
