#include "scbm/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>

#include "scbm/backend.hpp"
#include "scbm/error.hpp"
#include "scbm/random.hpp"

namespace scbm {
namespace {

const std::array<AnnotatorProfile, kAnnotatorsPerPost> kProfiles{{
    {"F", "18-22", "White or Caucasian", "Bachelor's degree", "United Kingdom"},
    {"M", "23-45", "Hispano or Latino", "High school degree or equivalent", "Mexico"},
    {"F", "46+", "Black or African American", "Master's degree", "United States"},
    {"M", "18-22", "Asian", "Doctorate", "Spain"},
    {"F", "23-45", "Multiracial", "Less than high school diploma", "Chile"},
    {"M", "46+", "Middle Eastern", "Bachelor's degree", "Portugal"},
}};

}  // namespace

double mock_margin(const ConceptLexicon& lexicon, const std::string& text) {
    const std::size_t half = lexicon.size() / 2;
    double gap = 0.0;
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
        const double p = MockBackend::yes_probability(lexicon[i], text, "");
        if (i < half) gap += p;
        else if (i >= lexicon.size() - half) gap -= p;  // odd sizes leave the middle entry out
    }
    return gap;
}

SyntheticCorpus make_separable_corpus(const ConceptLexicon& lexicon, const SyntheticOptions& options) {
    if (lexicon.size() < 2) throw InvalidInput("synthetic corpus needs at least two concepts");
    if (options.train == 0 || options.train >= options.posts) {
        throw InvalidInput("synthetic corpus needs non-empty train and dev splits");
    }
    if (!(options.margin >= 0.0)) throw InvalidInput("margin must be non-negative");

    Rng rng(options.seed);
    SyntheticCorpus corpus;
    constexpr int kMaxTries = 100000;
    for (std::size_t i = 0; i < options.posts; ++i) {
        const bool sexist = i % 2 == 0;
        AnnotatedPost post;
        char id[32];
        std::snprintf(id, sizeof id, "syn%05zu", i);
        post.id = id;
        post.lang = i % 4 < 2 ? Lang::en : Lang::es;
        int tries = 0;
        for (;; ++tries) {
            if (tries == kMaxTries) throw InvalidInput("margin too large: no separable text found");
            char nonce[24];
            std::snprintf(nonce, sizeof nonce, "%016llx", static_cast<unsigned long long>(rng.next()));
            post.text = "synthetic post " + post.id + " " + nonce;
            const double gap = mock_margin(lexicon, post.text);
            if (sexist ? gap >= options.margin : gap <= -options.margin) break;
        }
        for (std::size_t a = 0; a < kAnnotatorsPerPost; ++a) {
            Annotation ann;
            ann.annotator_id = "Annotator_" + std::to_string(a + 1);
            ann.profile = kProfiles[a];
            ann.identification = sexist ? 0 : 1;
            ann.intention = sexist ? 0 : 3;
            ann.categories = sexist ? std::vector<int>{1} : std::vector<int>{};
            post.annotations.push_back(std::move(ann));
        }
        corpus.splits[i < options.train ? "train" : "dev"].push_back(post.id);
        corpus.posts.push_back(std::move(post));
    }
    return corpus;
}

std::string dataset_json(const std::vector<AnnotatedPost>& posts) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& post : posts) {
        nlohmann::ordered_json rec;
        rec["id_EXIST"] = post.id;
        rec["lang"] = lang_code(post.lang) == "EN" ? "en" : "es";
        rec["tweet"] = post.text;
        rec["number_annotators"] = post.annotations.size();
        auto ids = nlohmann::ordered_json::array(), gender = ids, age = ids, eth = ids, edu = ids, country = ids;
        auto t1 = ids, t2 = ids, t3 = ids;
        for (const auto& a : post.annotations) {
            ids.push_back(a.annotator_id);
            gender.push_back(a.profile.gender);
            age.push_back(a.profile.age_group);
            eth.push_back(a.profile.ethnicity);
            edu.push_back(a.profile.education);
            country.push_back(a.profile.country);
            t1.push_back(a.identification ? submission_label(Task::identification, *a.identification) : "-");
            t2.push_back(a.intention ? (*a.intention == 3 ? "-" : label_universe(Task::intention)[*a.intention])
                                     : "-");
            auto cats = nlohmann::ordered_json::array();
            if (a.categories) {
                for (const int c : *a.categories) cats.push_back(label_universe(Task::categorization)[c]);
            }
            if (cats.empty()) cats.push_back("-");
            t3.push_back(std::move(cats));
        }
        rec["annotators"] = std::move(ids);
        rec["gender_annotators"] = std::move(gender);
        rec["age_annotators"] = std::move(age);
        rec["ethnicities_annotators"] = std::move(eth);
        rec["study_levels_annotators"] = std::move(edu);
        rec["countries_annotators"] = std::move(country);
        rec["labels_task1_1"] = std::move(t1);
        rec["labels_task1_2"] = std::move(t2);
        rec["labels_task1_3"] = std::move(t3);
        rec["split"] = "TRAIN_" + lang_code(post.lang);
        doc[post.id] = std::move(rec);
    }
    return doc.dump(2) + "\n";
}

std::string splits_json(const SplitManifest& splits) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& [name, ids] : splits) doc[name] = ids;
    return doc.dump(2) + "\n";
}

}  // namespace scbm
