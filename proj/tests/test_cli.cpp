#include <doctest.h>
#include <nlohmann/json.hpp>

#include "scbm/cli.hpp"
#include "scbm/error.hpp"
#include "scbm/synthetic.hpp"
#include "scbm/text.hpp"
#include "support.hpp"

using namespace scbm;
using namespace scbm::cli;
using scbm::testing::TempDir;

namespace {

// Synthetic corpus plus a config file in a fresh directory.
struct Workspace {
    TempDir dir{"cli"};
    std::string config;

    explicit Workspace(std::size_t posts = 40, std::size_t train = 30, const std::string& extra = "") {
        SyntheticOptions o;
        o.posts = posts;
        o.train = train;
        o.seed = 3;
        const auto corpus = make_separable_corpus(load_lexicon("exist2025-default"), o);
        text::write_file(dir.file("dataset.json"), dataset_json(corpus.posts));
        text::write_file(dir.file("splits.json"), splits_json(corpus.splits));
        config = dir.file("run.json");
        write_config(R"({"seed": 7, "paths": {"dataset": "dataset.json", "splits": "splits.json", "output_dir": "out"},
                         "train": {"epochs": 40, "hidden": [16]})" + extra + "}");
    }

    void write_config(const std::string& json) const { text::write_file(config, json); }

    int run(std::vector<std::string> args) const {
        args.insert(args.begin(), "scbm");
        args.push_back("--config");
        args.push_back(config);
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        return cli::run(static_cast<int>(argv.size()), argv.data());
    }

    std::string read(const std::string& rel) const { return text::read_file(dir.file(rel)); }
};

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("config validation") {
        Workspace ws(4, 2);
        const auto base = ws.dir.path();
        CHECK_THROWS_AS(parse_run_config(R"({"paths": {"dataset": "dataset.json", "splits": "splits.json"}})", base),
                        ConfigError);
        CHECK_THROWS_AS(parse_run_config(
                            R"({"seed": 1, "colour": 1, "paths": {"dataset": "dataset.json", "splits": "splits.json"}})",
                            base),
                        ConfigError);
        CHECK_THROWS_AS(parse_run_config(R"({"seed": 1, "paths": {"dataset": "nope.json", "splits": "splits.json"}})",
                                         base),
                        ConfigError);
        CHECK_THROWS_AS(parse_run_config(
                            R"({"seed": 1, "train": {"lr": 1}, "paths": {"dataset": "dataset.json", "splits": "splits.json"}})",
                            base),
                        ConfigError);
        CHECK_THROWS_AS(parse_run_config(
                            R"({"seed": 1, "model": "scbmt", "paths": {"dataset": "dataset.json", "splits": "splits.json"}})",
                            base),
                        ConfigError);

        const RunConfig c = load_run_config(ws.config);
        CHECK(c.seed == 7);
        CHECK(c.dataset == base / "dataset.json");
        CHECK(c.output_dir == base / "out");
        CHECK(c.train.learning_rate == 2e-3);
        CHECK(c.train.epochs == 40);
        CHECK(c.train.patience == 20);
        CHECK(c.cache_path() == base / "out" / "score-cache.bin");
        CHECK(c.vectors_path() == base / "out" / "vectors.none.tsv");

        Overrides ov;
        ov.seed = 99;
        ov.task = "1.2";
        ov.persona_mode = "per_annotator";
        const RunConfig o = load_run_config(ws.config, ov);
        CHECK(o.seed == 99);
        CHECK(o.train.seed == 99);
        CHECK(o.train.task == Task::intention);
        CHECK(o.vectors_path() == base / "out" / "vectors.per_annotator.tsv");

        const auto echo = nlohmann::json::parse(config_echo_json(c));
        CHECK(echo["train"]["optimizer"] == "rmsprop");
        CHECK(echo["train"]["learning_rate"] == 2e-3);
    }

    TEST_CASE("scbmt defaults") {
        Workspace ws(4, 2);
        text::write_file(ws.dir.file("emb.tsv"), "#scbm-embeddings v1 dim=1 provider=t\n");
        const RunConfig c = parse_run_config(
            R"({"seed": 1, "model": "scbmt", "paths": {"dataset": "dataset.json", "splits": "splits.json", "embeddings": "emb.tsv"}})",
            ws.dir.path());
        CHECK(c.train.learning_rate == 1e-5);
        CHECK(c.train.epochs == 16);
        CHECK(c.train.patience == 3);
    }

    TEST_CASE("full offline run and idempotent outputs") {
        Workspace ws;
        CHECK(ws.run({"score"}) == 0);
        CHECK(ws.run({"train"}) == 0);
        const auto manifest = nlohmann::json::parse(ws.read("out/run_manifest.json"));
        CHECK(manifest["config"]["train"]["learning_rate"] == 2e-3);
        CHECK(manifest["config"]["train"]["epochs"] == 40);
        CHECK(manifest["result"]["best_dev_macro_f1"].get<double>() >= 0.8);
        CHECK(ws.run({"predict"}) == 0);
        CHECK(ws.run({"evaluate"}) == 0);
        CHECK(ws.run({"explain", "--global"}) == 0);
        CHECK(ws.run({"explain"}) == 0);

        const std::vector<std::string> outputs{"out/checkpoint.json", "out/history.csv", "out/predictions.json",
                                               "out/predictions_soft.json", "out/metrics.json",
                                               "out/explanations_global.csv", "out/explanations_local.csv"};
        std::vector<std::string> first;
        for (const auto& o : outputs) first.push_back(ws.read(o));
        const auto metrics = nlohmann::json::parse(first[4]);
        CHECK(metrics.contains("ALL"));
        CHECK(metrics.contains("EN"));
        CHECK(metrics.contains("ES"));
        CHECK(nlohmann::json::parse(first[2]).size() == 10);

        // Same seed and inputs give byte-identical artifacts.
        CHECK(ws.run({"score"}) == 0);
        CHECK(ws.run({"train"}) == 0);
        CHECK(ws.run({"predict"}) == 0);
        CHECK(ws.run({"evaluate"}) == 0);
        CHECK(ws.run({"explain", "--global"}) == 0);
        CHECK(ws.run({"explain"}) == 0);
        for (std::size_t i = 0; i < outputs.size(); ++i) CHECK_MESSAGE(ws.read(outputs[i]) == first[i], outputs[i]);
    }

    TEST_CASE("per-annotator scoring writes six rows per post") {
        Workspace ws(2, 1);
        CHECK(ws.run({"score", "--persona-mode", "per_annotator"}) == 0);
        const VectorTable t = load_vectors(ws.dir.file("out/vectors.per_annotator.tsv"));
        CHECK(t.rows.size() == 12);
        CHECK(t.adjectives.size() == 131);
    }

    TEST_CASE("exit codes") {
        Workspace ws(4, 2);
        CHECK(ws.run({"frobnicate"}) == 1);
        CHECK(ws.run({"train", "--model", "nope"}) == 1);
        // No vectors yet: score has to run first.
        CHECK(ws.run({"train"}) == 1);
        ws.write_config(R"({"paths": {"dataset": "dataset.json", "splits": "splits.json"}})");
        CHECK(ws.run({"score"}) == 1);
        ws.write_config(R"({"seed": 1, "model": "scbmt", "paths": {"dataset": "dataset.json", "splits": "splits.json"}})");
        CHECK(ws.run({"train"}) == 1);
        ws.write_config(R"({"seed": 1, "backend": {"kind": "http", "base_url": "http://127.0.0.1:9", "model_id": "m", "timeout_seconds": 1,
                            "retry": {"max_attempts": 1}},
                            "paths": {"dataset": "dataset.json", "splits": "splits.json"}})");
        CHECK(ws.run({"score"}) == 2);
    }
}
