#include <doctest.h>

#include <cmath>
#include <limits>

#include "scbm/error.hpp"
#include "scbm/lexicon.hpp"
#include "scbm/persona.hpp"
#include "scbm/random.hpp"
#include "scbm/task.hpp"
#include "scbm/text.hpp"

using namespace scbm;

TEST_SUITE("text") {
    TEST_CASE("sha256 matches the FIPS 180-2 test vector") {
        CHECK(text::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(text::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    TEST_CASE("fnv1a64 reference values") {
        CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
        CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
        CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ULL);
    }

    TEST_CASE("case folding and concept normalization") {
        CHECK(text::fold_case("ABC") == "abc");
        CHECK(text::fold_case("ÉLAN") == "élan");
        CHECK(text::fold_case("Straße") == "strasse");
        CHECK(text::fold_case("ΑΒΓ") == "αβγ");
        CHECK(text::fold_case("ДОМ") == "дом");
        CHECK(text::normalize_concept("  Superiority‑Minded ") == "superiority-minded");
        CHECK(text::normalize_concept("a−b") == "a-b");
    }

    TEST_CASE("utf8 validation") {
        CHECK(text::is_valid_utf8("plain"));
        CHECK(text::is_valid_utf8("ñandú"));
        CHECK_FALSE(text::is_valid_utf8(std::string("\xC3\x28", 2)));
        CHECK_FALSE(text::is_valid_utf8(std::string("\xE2\x82", 2)));
    }

    TEST_CASE("format_double round-trips every bit") {
        Rng rng(11);
        for (int i = 0; i < 2000; ++i) {
            const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(200)) - 100);
            CHECK(text::parse_double(text::format_double(v)) == v);
        }
        CHECK(std::signbit(text::parse_double(text::format_double(-0.0))));
        CHECK(text::parse_double(text::format_double(std::numeric_limits<double>::denorm_min())) ==
              std::numeric_limits<double>::denorm_min());
        CHECK_THROWS_AS(text::parse_double("1.5x"), InvalidInput);
    }

    TEST_CASE("csv quoting") {
        CHECK(text::csv_field("plain") == "plain");
        CHECK(text::csv_field("a,b") == "\"a,b\"");
        CHECK(text::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    }
}

TEST_SUITE("task") {
    TEST_CASE("label universes and raw label parsing") {
        CHECK(label_universe(Task::identification) == std::vector<std::string>{"SEXIST", "NON-SEXIST"});
        CHECK(label_universe(Task::intention).size() == 4);
        CHECK(label_universe(Task::categorization).size() == 5);
        CHECK(parse_label(Task::identification, "YES") == 0);
        CHECK(parse_label(Task::identification, "NO") == 1);
        CHECK(parse_label(Task::intention, "-") == 3);
        CHECK(parse_label(Task::intention, "judgmental") == 1);
        CHECK_FALSE(parse_label(Task::categorization, "-").has_value());
        CHECK(parse_label(Task::categorization, "SEXUAL_VIOLENCE") == 3);
        CHECK_THROWS_AS(parse_label(Task::identification, "MAYBE"), InvalidInput);
        CHECK_THROWS_AS(parse_task("2.1"), InvalidTask);
        CHECK(parse_task("1_2") == Task::intention);
        CHECK(submission_label(Task::identification, 0) == "YES");
        CHECK(submission_label(Task::intention, 3) == "NO");
    }
}

TEST_SUITE("lexicon") {
    TEST_CASE("built-in lexicon") {
        const ConceptLexicon lex = load_lexicon("exist2025-default");
        CHECK(lex.version() == "exist2025-default");
        // 132 table cells with one repeated adjective.
        CHECK(lex.size() == 131);
        CHECK(lex[0] == "abusive");
        CHECK(lex.concepts().back() == "vituperative");
        CHECK(lex.contains("Superiority‑minded"));
        CHECK(lex.index_of("DOCUMENTING").has_value());
    }

    TEST_CASE("parsing, deduplication and versions") {
        const ConceptLexicon a = parse_lexicon("# comment\nBrave\n brave \n\nCalm\n");
        CHECK(a.size() == 2);
        CHECK(a[0] == "Brave");
        CHECK(a.version().rfind("file-", 0) == 0);
        CHECK(a.version().size() == 17);
        // Version hash depends only on the normalized entries.
        CHECK(parse_lexicon("brave\ncalm\n").version() == a.version());
        CHECK(parse_lexicon("# version: v9\nx\n").version() == "v9");
        CHECK_THROWS_AS(parse_lexicon("# only comments\n\n"), EmptyLexicon);
        CHECK_THROWS_AS(parse_lexicon(std::string("\xC3\x28\n", 3)), InvalidInput);
    }

    TEST_CASE("serialize round trip and merge") {
        const ConceptLexicon lex = load_lexicon("exist2025-default");
        CHECK(parse_lexicon(serialize_lexicon(lex)) == lex);
        const ConceptLexicon a({"x", "y"}, "a");
        const ConceptLexicon b({"Y", "z"}, "b");
        const ConceptLexicon m = merge_lexicons(a, b);
        CHECK(m.concepts() == std::vector<std::string>{"x", "y", "z"});
        CHECK(m.version() == "a+b");
    }

    TEST_CASE("generation prompts") {
        for (const char* id : {"1.1", "1.2", "1.3"}) {
            const auto spec = render_generation_prompt(id);
            CHECK(spec.rendered_prompt.find("Provide me with 50 adjectives") != std::string::npos);
            CHECK(spec.rendered_prompt.find('\\') == std::string::npos);
        }
        CHECK(render_generation_prompt(Task::intention).rendered_prompt.find("25% less") != std::string::npos);
        CHECK_THROWS_AS(render_generation_prompt("9.9"), InvalidTask);
    }
}

TEST_SUITE("persona") {
    TEST_CASE("persona sentence") {
        const AnnotatorProfile p{"F", "46+", "Hispano or Latino", "Bachelor's degree", "Mexico"};
        CHECK(render_persona(p) ==
              "You are a woman aged above 45 years old with Hispano or Latino ethnicity with a Bachelor's degree "
              "coming from Mexico");
        const AnnotatorProfile q{"M", "18-22", "Asian", "High school", "Spain"};
        CHECK(render_persona(q) ==
              "You are a man aged between 18 and 22 years old with Asian ethnicity with a High school degree "
              "coming from Spain");
        CHECK_THROWS_AS(render_persona({"F", "", "x", "y", "z"}), InvalidInput);
    }
}
