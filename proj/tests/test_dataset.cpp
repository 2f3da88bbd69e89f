#include <doctest.h>

#include <algorithm>
#include <set>

#include "scbm/dataset.hpp"
#include "scbm/error.hpp"
#include "scbm/synthetic.hpp"
#include "support.hpp"

using namespace scbm;
using scbm::testing::make_post;

namespace {

std::string record(const std::string& id, int annotators, const std::string& extra = "") {
    std::string ids, genders, ages, eth, edu, country, t1, t2, t3;
    for (int i = 0; i < annotators; ++i) {
        const std::string sep = i ? "," : "";
        ids += sep + "\"A" + std::to_string(i) + "\"";
        genders += sep + (i % 2 ? "\"M\"" : "\"F\"");
        ages += sep + "\"23-45\"";
        eth += sep + "\"White or Caucasian\"";
        edu += sep + "\"Bachelor's degree\"";
        country += sep + "\"Spain\"";
        t1 += sep + (i < 4 ? "\"YES\"" : "\"NO\"");
        t2 += sep + (i < 4 ? "\"DIRECT\"" : "\"-\"");
        t3 += sep + (i < 4 ? "[\"OBJECTIFICATION\",\"SEXUAL-VIOLENCE\"]" : "[\"-\"]");
    }
    return "{\"id_EXIST\":\"" + id + "\",\"lang\":\"es\",\"tweet\":\"texto " + id + "\",\"annotators\":[" + ids +
           "],\"gender_annotators\":[" + genders + "],\"age_annotators\":[" + ages +
           "],\"ethnicities_annotators\":[" + eth + "],\"study_levels_annotators\":[" + edu +
           "],\"countries_annotators\":[" + country + "],\"labels_task1_1\":[" + t1 + "],\"labels_task1_2\":[" + t2 +
           "],\"labels_task1_3\":[" + t3 + "]" + extra + "}";
}

std::map<int, std::size_t> class_counts(const std::vector<AnnotatedPost>& posts, Task task) {
    std::map<int, std::size_t> c;
    for (const auto& p : posts) ++c[hard_class(derive_targets(p, task).hard)];
    return c;
}

}  // namespace

TEST_SUITE("dataset") {
    TEST_CASE("ingests JSON lines, arrays and EXIST-style objects") {
        const std::string jsonl = record("1", 6) + "\n" + record("2", 6) + "\n" + record("3", 6) + "\n";
        const auto posts = parse_dataset(jsonl);
        REQUIRE(posts.size() == 3);
        CHECK(posts[0].id == "1");
        CHECK(posts[0].lang == Lang::es);
        CHECK(posts[0].annotations[1].profile.gender == "M");
        CHECK(posts[0].annotations[0].identification == 0);
        CHECK(posts[0].annotations[5].intention == 3);
        CHECK(*posts[0].annotations[0].categories == std::vector<int>{2, 3});
        CHECK(posts[0].annotations[5].categories->empty());

        CHECK(parse_dataset("[" + record("1", 6) + "," + record("2", 6) + "]").size() == 2);
        const auto obj = parse_dataset("{\"b\":" + record("b", 6) + ",\"a\":" + record("a", 6) + "}");
        REQUIRE(obj.size() == 2);
        CHECK(obj[0].id == "b");  // file order, not key order
    }

    TEST_CASE("five annotations is an AnnotationCountError naming the id") {
        try {
            (void)parse_dataset(record("ok", 6) + "\n" + record("short", 5) + "\n");
            FAIL("expected AnnotationCountError");
        } catch (const AnnotationCountError& e) {
            CHECK(std::string(e.what()).find("short") != std::string::npos);
        }
    }

    TEST_CASE("missing field is a SchemaError with the field path") {
        std::string r = record("x", 6);
        const auto pos = r.find("\"tweet\"");
        r.replace(pos, 7, "\"twit\"");
        try {
            (void)parse_dataset(r);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("tweet") != std::string::npos);
        }
    }

    TEST_CASE("field mapping with nested paths") {
        FieldMapping m = FieldMapping::from_json_text(R"({"text": "content.body", "task2": null, "task3": null})");
        std::string r = record("n", 6);
        r.replace(r.find("\"tweet\":\"texto n\""), 17, "\"content\":{\"body\":\"nested\"}");
        const auto posts = parse_dataset(r, m);
        REQUIRE(posts.size() == 1);
        CHECK(posts[0].text == "nested");
        CHECK_FALSE(posts[0].annotations[0].intention.has_value());
        CHECK_THROWS_AS(FieldMapping::from_json_text(R"({"txet": "x"})"), ConfigError);
    }

    TEST_CASE("derive_targets for every binary vote split") {
        for (int k = 0; k <= 6; ++k) {
            const Targets t = derive_targets(make_post("p", k), Task::identification);
            // Independent count of SEXIST votes.
            CHECK(t.soft.distribution[0] == k / 6.0);
            CHECK(t.soft.distribution[0] + t.soft.distribution[1] == 1.0);
            CHECK(hard_class(t.hard) == (k >= 3 ? 0 : 1));
        }
    }

    TEST_CASE("task 1.2 ties and task 1.3 label sets") {
        // 2 DIRECT, 2 REPORTED, 2 NON-SEXIST: intention classes win ties, lowest index first.
        auto p = make_post("p", 4, Lang::en, {0, 0, 2, 2, 3, 3});
        CHECK(hard_class(derive_targets(p, Task::intention).hard) == 0);
        p = make_post("q", 2, Lang::en, {1, 3, 3, 3, 2, 2});
        CHECK(hard_class(derive_targets(p, Task::intention).hard) == 3);

        // A has 4 votes, B 2 votes.
        p = make_post("r", 4, Lang::en, {}, {{0, 1}, {0, 1}, {0}, {0}, {}, {}});
        Targets t = derive_targets(p, Task::categorization);
        CHECK(t.soft.distribution[0] == 4.0 / 6.0);
        CHECK(t.soft.distribution[1] == 2.0 / 6.0);
        CHECK(hard_set(t.hard) == std::vector<int>{0});

        // No label above 3 votes on a SEXIST post: the most-voted label is kept.
        p = make_post("s", 4, Lang::en, {}, {{2}, {2}, {2}, {1}, {}, {}});
        CHECK(hard_set(derive_targets(p, Task::categorization).hard) == std::vector<int>{2});
        // Same votes on a NON-SEXIST post: empty set.
        p = make_post("t", 2, Lang::en, {}, {{2}, {2}, {}, {}, {}, {}});
        CHECK(hard_set(derive_targets(p, Task::categorization).hard).empty());
    }

    TEST_CASE("undersample caps the target class") {
        std::vector<AnnotatedPost> posts;
        int n = 0;
        const auto add = [&](int intention, int count) {
            for (int i = 0; i < count; ++i) {
                const std::vector<int> votes(6, intention);
                posts.push_back(make_post("p" + std::to_string(n++), intention == 3 ? 0 : 6, Lang::en, votes));
            }
        };
        add(3, 100);
        add(0, 30);
        add(1, 20);
        add(2, 10);
        const auto r1 = undersample(posts, Task::intention, 3, 42);
        const auto counts = class_counts(r1.posts, Task::intention);
        CHECK(counts.at(3) == 30);
        CHECK(counts.at(0) == 30);
        CHECK(counts.at(1) == 20);
        CHECK(counts.at(2) == 10);
        CHECK_FALSE(r1.no_op);

        // Survivors keep input order; non-target posts are untouched.
        std::vector<std::size_t> positions;
        for (const auto& p : r1.posts) positions.push_back(std::stoul(p.id.substr(1)));
        CHECK(std::is_sorted(positions.begin(), positions.end()));
        for (const auto& p : r1.posts) {
            const auto& orig = posts[std::stoul(p.id.substr(1))];
            CHECK(p.text == orig.text);
        }

        const auto r2 = undersample(posts, Task::intention, 3, 42);
        std::set<std::string> s1, s2;
        for (const auto& p : r1.posts) s1.insert(p.id);
        for (const auto& p : r2.posts) s2.insert(p.id);
        CHECK(s1 == s2);
        const auto r3 = undersample(posts, Task::intention, 3, 43);
        std::set<std::string> s3;
        for (const auto& p : r3.posts) s3.insert(p.id);
        CHECK(s3 != s1);

        // Already balanced: fixpoint.
        const auto again = undersample(r1.posts, Task::intention, 3, 7);
        CHECK(again.posts.size() == r1.posts.size());

        // Absent target class: warning, unchanged input.
        std::vector<AnnotatedPost> no_neg(posts.begin() + 100, posts.end());
        const auto noop = undersample(no_neg, Task::intention, 3, 1);
        CHECK(noop.no_op);
        CHECK(noop.posts.size() == no_neg.size());
        CHECK_THROWS_AS(undersample(posts, Task::categorization, 0, 1), ConfigError);
    }

    TEST_CASE("splits manifest") {
        const auto s = parse_splits(R"({"train": ["a", "b"], "dev": ["c"]})");
        CHECK(s.at("train").size() == 2);
        CHECK_THROWS(parse_splits("[1,2]"));
    }

    TEST_CASE("synthetic corpus round-trips through the EXIST layout") {
        SyntheticOptions o;
        o.posts = 12;
        o.train = 8;
        o.seed = 5;
        const ConceptLexicon lex = load_lexicon("exist2025-default");
        const auto corpus = make_separable_corpus(lex, o);
        const auto posts = parse_dataset(dataset_json(corpus.posts));
        REQUIRE(posts.size() == 12);
        for (std::size_t i = 0; i < posts.size(); ++i) {
            CHECK(posts[i].id == corpus.posts[i].id);
            CHECK(posts[i].text == corpus.posts[i].text);
            const double gap = mock_margin(lex, posts[i].text);
            const int label = hard_class(derive_targets(posts[i], Task::identification).hard);
            CHECK((label == 0 ? gap >= 2.0 : gap <= -2.0));
        }
        CHECK(parse_splits(splits_json(corpus.splits)) == corpus.splits);
    }
}
