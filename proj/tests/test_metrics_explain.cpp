#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

#include "oracles.hpp"
#include "scbm/error.hpp"
#include "scbm/explain.hpp"
#include "scbm/metrics.hpp"
#include "support.hpp"

using namespace scbm;
using scbm::testing::small_lexicon;

namespace {

double ce_oracle(const std::vector<std::vector<double>>& p, const std::vector<std::vector<double>>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t c = 0; c < p[i].size(); ++c) {
            if (g[i][c] > 0) s += -g[i][c] * std::log(std::max(p[i][c], 1e-7));
        }
    }
    return s / static_cast<double>(p.size());
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
    std::vector<double> v(k);
    double s = 0.0;
    for (auto& x : v) s += (x = rng.uniform(0.01, 1.0));
    for (auto& x : v) x /= s;
    return v;
}

Checkpoint scbm_checkpoint(std::size_t dim, Task task, std::uint64_t seed) {
    Rng rng(seed);
    Checkpoint ck;
    ck.lexicon = small_lexicon(dim);
    ck.head = ScbmHead::create(dim, task, {{6}}, rng);
    return ck;
}

ConceptVector concept_vector(const std::string& id, const Vector& c, const std::string& version = "test-lex") {
    return {id, std::nullopt, std::vector<double>(c.data(), c.data() + c.size()), version};
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("macro-F1 on a fixed fixture") {
        // All predicted class 0, gold split 2/2: F1 = 2/3 and 0.
        const F1Report r = f1_report(std::vector<int>{0, 0, 0, 0}, {0, 0, 1, 1}, {"A", "B"});
        CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(r.per_class[0].precision == 0.5);
        CHECK(r.per_class[0].recall == 1.0);
        CHECK(r.per_class[1].f1 == 0.0);
        CHECK(r.per_class[1].zero_division);
        CHECK(r.zero_division);
        CHECK(macro_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == 1.0);
        CHECK_THROWS_AS(macro_f1({0, 3}, {0, 1}, 3), InputError);
        CHECK_THROWS_AS(macro_f1({0}, {0, 1}, 3), InputError);
    }

    TEST_CASE("multilabel macro-F1") {
        const std::vector<std::vector<int>> pred{{0, 1}, {1}, {}};
        const std::vector<std::vector<int>> gold{{0}, {1}, {2}};
        const F1Report r = f1_report(pred, gold, {"a", "b", "c"});
        // a: 1/1/0 -> 1; b: tp 1 fp 1 -> 2/3; c: fn 1 -> 0
        CHECK(r.macro_f1 == doctest::Approx((1.0 + 2.0 / 3.0) / 3.0).epsilon(1e-15));
    }

    TEST_CASE("macro-F1 is invariant to instance order") {
        Rng rng(4);
        std::vector<int> p(200), g(200);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<int>(rng.below(4));
            g[i] = static_cast<int>(rng.below(4));
        }
        const double base = macro_f1(p, g, 4);
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<int> p2, g2;
        for (auto i : order) {
            p2.push_back(p[i]);
            g2.push_back(g[i]);
        }
        CHECK(macro_f1(p2, g2, 4) == base);
    }

    TEST_CASE("soft cross-entropy") {
        CHECK(soft_cross_entropy({{0.5, 0.5}}, {{0.5, 0.5}}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(soft_cross_entropy({{1.0, 0.0}}, {{1.0, 0.0}}) == 0.0);
        CHECK(soft_cross_entropy({{0.0, 1.0}}, {{1.0, 0.0}}) == doctest::Approx(-std::log(1e-7)).epsilon(1e-15));
        CHECK_THROWS_AS(soft_cross_entropy({{0.5, 0.5}}, {{1.0}}), InputError);
        CHECK_THROWS_AS(soft_cross_entropy({}, {}), InputError);

        Rng rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::vector<double>> p, g;
            for (int i = 0; i < 10; ++i) {
                p.push_back(random_simplex(rng, 4));
                g.push_back(random_simplex(rng, 4));
            }
            CHECK(soft_cross_entropy(p, g) == doctest::Approx(ce_oracle(p, g)).epsilon(1e-12));
            // Gibbs: for fixed gold, the minimum sits at pred = gold.
            CHECK(soft_cross_entropy(g, g) <= soft_cross_entropy(p, g));
        }
    }

    TEST_CASE("multilabel cross-entropy") {
        CHECK(multilabel_cross_entropy({{0.5, 0.5}}, {{1.0, 0.0}}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(multilabel_cross_entropy({{1.0, 0.0}}, {{1.0, 0.0}}) == 0.0);
    }

    TEST_CASE("evaluate and report JSON") {
        std::vector<EvalInstance> inst;
        for (int i = 0; i < 4; ++i) {
            EvalInstance e;
            e.predicted = 0;
            e.probabilities = {0.5, 0.5};
            e.gold.hard = i < 2 ? 0 : 1;
            e.gold.soft = {Task::identification, {i < 2 ? 1.0 : 0.0, i < 2 ? 0.0 : 1.0}};
            inst.push_back(e);
        }
        const EvalResult r = evaluate(Task::identification, inst);
        CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(r.cross_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(r.n == 4);
        const std::string json = metrics_report_json({{"ALL", r}, {"EN", r}});
        CHECK(json == metrics_report_json({{"EN", r}, {"ALL", r}}));
        const auto doc = nlohmann::json::parse(json);
        CHECK(doc["ALL"]["task"] == "1.1");
        CHECK(doc["EN"]["per_class"][1]["label"] == "NON-SEXIST");
        CHECK_THROWS_AS(evaluate(Task::identification, {}), InputError);
    }

    TEST_CASE("submission shape") {
        const std::vector<SubmissionRecord> hard{{"1", HardLabel{0}, {0.8, 0.2}}, {"2", HardLabel{1}, {0.1, 0.9}}};
        const auto doc = nlohmann::json::parse(submission_json(hard, Task::identification, false));
        CHECK(doc[0]["test_case"] == "EXIST2025");
        CHECK(doc[0]["value"] == "YES");
        CHECK(doc[1]["value"] == "NO");
        const auto soft = nlohmann::json::parse(submission_json(hard, Task::identification, true));
        CHECK(soft[0]["value"]["YES"] == 0.8);
        const std::vector<SubmissionRecord> ml{{"3", HardLabel{std::vector<int>{}}, {}},
                                               {"4", HardLabel{std::vector<int>{0, 2}}, {}}};
        const auto m = nlohmann::json::parse(submission_json(ml, Task::categorization, false));
        CHECK(m[0]["value"] == nlohmann::json::array({"NO"}));
        CHECK(m[1]["value"] == nlohmann::json::array({"IDEOLOGICAL-INEQUALITY", "OBJECTIFICATION"}));
        CHECK(nlohmann::json::parse(submission_json(hard, Task::intention, false))[1]["value"] == "JUDGEMENTAL");
    }
}

TEST_SUITE("explain") {
    TEST_CASE("local top-k matches a sort oracle") {
        const Checkpoint ck = scbm_checkpoint(30, Task::intention, 3);
        Rng rng(12);
        for (int i = 0; i < 25; ++i) {
            const Vector c = oracle::random_matrix(rng, 30, 1).col(0);
            const auto ex = explain_instance(ck, concept_vector("x", c), 10);
            const Vector r = oracle::gated_activation(std::get<ScbmHead>(ck.head).gate(), c);
            const auto order = oracle::argsort_desc(r);
            REQUIRE(ex.ranked.size() == 10);
            for (std::size_t j = 0; j < 10; ++j) {
                CHECK(ex.ranked[j].index == order[j]);
                CHECK(ex.ranked[j].adjective == ck.lexicon[order[j]]);
                CHECK(ex.ranked[j].activation == doctest::Approx(r(static_cast<Eigen::Index>(order[j]))).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("one-hot concept ranks first and ties keep lexicon order") {
        const Checkpoint ck = scbm_checkpoint(8, Task::identification, 5);
        Vector c = Vector::Zero(8);
        c(6) = 1.0;
        const auto ex = explain_instance(ck, concept_vector("x", c), 3);
        CHECK(ex.ranked[0].index == 6);
        CHECK(ex.ranked[1].index == 0);
        CHECK(ex.ranked[2].index == 1);
    }

    TEST_CASE("local explanation errors") {
        const Checkpoint ck = scbm_checkpoint(4, Task::identification, 1);
        const Vector c = Vector::Constant(4, 0.5);
        CHECK_THROWS_AS(explain_instance(ck, concept_vector("x", c), 0), InvalidInput);
        CHECK_THROWS_AS(explain_instance(ck, concept_vector("x", c), 5), InvalidInput);
        CHECK_THROWS_AS(explain_instance(ck, concept_vector("x", c, "other"), 2), ConfigError);
        CHECK_THROWS_AS(explain_instance(ck, concept_vector("x", Vector::Constant(3, 0.5)), 2), ShapeError);

        Rng rng(2);
        Checkpoint t;
        t.lexicon = small_lexicon(4);
        t.head = ScbmtHead::create(4, 2, Task::identification, {}, rng);
        CHECK_THROWS_AS(explain_instance(t, concept_vector("x", c), 2), Unsupported);
        const Vector e = Vector::Constant(2, 0.1);
        const auto ex = explain_instance(t, concept_vector("x", c), 2, true, &e);
        CHECK(ex.concept_branch);
        CHECK(ex.ranked[0].activation == 0.5);
        CHECK_THROWS_AS(explain_global(t, {concept_vector("x", c)}, {HardLabel{0}}), Unsupported);
    }

    TEST_CASE("global means equal a brute-force average") {
        for (const Task task : {Task::identification, Task::intention, Task::categorization}) {
            const Checkpoint ck = scbm_checkpoint(12, task, 40 + static_cast<std::uint64_t>(task));
            const auto& head = std::get<ScbmHead>(ck.head);
            Rng rng(17);
            std::vector<ConceptVector> vectors;
            std::vector<HardLabel> gold;
            for (int i = 0; i < 50; ++i) {
                const Vector c = oracle::random_matrix(rng, 12, 1).col(0);
                vectors.push_back(concept_vector("i" + std::to_string(i), c));
                // Gold agrees with the prediction on roughly half the instances.
                const HardLabel pred = decide(head.forward(c).probabilities, task).label;
                if (rng.below(2) == 0) gold.push_back(pred);
                else if (task == Task::categorization) gold.push_back(std::vector<int>{static_cast<int>(rng.below(5))});
                else gold.push_back(static_cast<int>(rng.below(output_arity(task))));
            }
            const GlobalResult r = explain_global(ck, vectors, gold, true);
            const std::size_t k = output_arity(task);
            std::size_t seen = 0;
            for (std::size_t cls = 0; cls < k; ++cls) {
                Vector sum = Vector::Zero(12);
                std::size_t n = 0;
                for (std::size_t i = 0; i < vectors.size(); ++i) {
                    const Vector c = Eigen::Map<const Vector>(vectors[i].scores.data(), 12);
                    const HardLabel pred = decide(head.forward(c).probabilities, task).label;
                    bool hit;
                    if (task == Task::categorization) {
                        const auto& g = hard_set(gold[i]);
                        const auto& p = hard_set(pred);
                        const int l = static_cast<int>(cls);
                        hit = std::count(g.begin(), g.end(), l) && std::count(p.begin(), p.end(), l);
                    } else {
                        hit = hard_class(gold[i]) == static_cast<int>(cls) && hard_class(pred) == static_cast<int>(cls);
                    }
                    if (!hit) continue;
                    sum += oracle::gated_activation(head.gate(), c);
                    ++n;
                }
                if (n == 0) {
                    CHECK(std::count(r.omitted.begin(), r.omitted.end(), label_universe(task)[cls]) == 1);
                    continue;
                }
                const GlobalExplanation& g = r.classes.at(seen++);
                CHECK(g.class_index == static_cast<int>(cls));
                CHECK(g.support == n);
                const Vector mean = sum / static_cast<double>(n);
                for (const auto& rc : g.ranked) {
                    CHECK(std::abs(rc.activation - mean(static_cast<Eigen::Index>(rc.index))) < 1e-12);
                }
            }
            CHECK(seen == r.classes.size());
        }
    }

    TEST_CASE("global ranking is invariant to instance order") {
        const Checkpoint ck = scbm_checkpoint(10, Task::identification, 9);
        Rng rng(3);
        std::vector<ConceptVector> v;
        std::vector<HardLabel> gold;
        for (int i = 0; i < 40; ++i) {
            const Vector c = oracle::random_matrix(rng, 10, 1).col(0);
            v.push_back(concept_vector("i", c));
            gold.push_back(decide(std::get<ScbmHead>(ck.head).forward(c).probabilities, Task::identification).label);
        }
        const auto a = explain_global(ck, v, gold, true);
        std::reverse(v.begin(), v.end());
        std::reverse(gold.begin(), gold.end());
        const auto b = explain_global(ck, v, gold, true);
        REQUIRE(a.classes.size() == b.classes.size());
        for (std::size_t c = 0; c < a.classes.size(); ++c) {
            for (std::size_t j = 0; j < a.classes[c].ranked.size(); ++j) {
                CHECK(a.classes[c].ranked[j].index == b.classes[c].ranked[j].index);
            }
        }
        // The negative class is left out by default.
        const auto d = explain_global(ck, v, gold);
        for (const auto& g : d.classes) CHECK(g.label != "NON-SEXIST");
    }

    TEST_CASE("intention global report has three rows") {
        const Checkpoint ck = scbm_checkpoint(6, Task::intention, 2);
        std::vector<GlobalExplanation> rows;
        for (int c = 0; c < 3; ++c) {
            GlobalExplanation g;
            g.task = Task::intention;
            g.class_index = c;
            g.label = label_universe(Task::intention)[static_cast<std::size_t>(c)];
            g.ranked = rank_concepts(ck.lexicon, Vector::LinSpaced(6, 0.1 * c, 1.0));
            rows.push_back(g);
        }
        const std::string csv = render_report(rows, ReportFormat::csv, 3);
        CHECK(csv ==
              "lang,task,class,adjectives\n"
              "ALL,1.2,DIRECT,\"adj5, adj4, adj3\"\n"
              "ALL,1.2,JUDGEMENTAL,\"adj5, adj4, adj3\"\n"
              "ALL,1.2,REPORTED,\"adj5, adj4, adj3\"\n");
    }

    TEST_CASE("local report formats are byte-stable") {
        LocalExplanation e;
        e.task = Task::identification;
        e.predicted = 0;
        e.lang = "EN";
        e.text = "a | b, \"c\"";
        e.ranked = {{"hostile", 0, 0.9}, {"crude", 1, 0.5}};
        CHECK(render_report({e}, ReportFormat::csv) ==
              "lang,task,class,text,adjectives\nEN,1.1,SEXIST,\"a | b, \"\"c\"\"\",\"hostile, crude\"\n");
        CHECK(render_report({e}, ReportFormat::markdown, 1) ==
              "| lang | task | class | text | adjectives |\n| --- | --- | --- | --- | --- |\n"
              "| EN | 1.1 | SEXIST | a \\| b, \"c\" | hostile |\n");
        CHECK(render_report({e}, ReportFormat::text) ==
              "lang: EN\ntask: 1.1\nclass: SEXIST\ntext: a | b, \"c\"\nadjectives: hostile, crude\n\n");
        CHECK_THROWS_AS(render_report(std::vector<LocalExplanation>{}, ReportFormat::csv), InvalidInput);
        CHECK_THROWS_AS(render_report(std::vector<GlobalExplanation>{}, ReportFormat::csv), InvalidInput);
        CHECK(parse_report_format("md") == ReportFormat::markdown);
        CHECK_THROWS_AS(parse_report_format("html"), ConfigError);
    }
}
