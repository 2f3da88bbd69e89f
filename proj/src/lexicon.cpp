#include "scbm/lexicon.hpp"

#include <spdlog/spdlog.h>

#include <unordered_set>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {

ConceptLexicon::ConceptLexicon(std::vector<std::string> concepts, std::string version)
    : version_(std::move(version)) {
    std::unordered_set<std::string> seen;
    concepts_.reserve(concepts.size());
    for (auto& raw : concepts) {
        std::string entry = text::trim(raw);
        if (entry.empty()) continue;
        if (!seen.insert(text::normalize_concept(entry)).second) {
            spdlog::warn("lexicon '{}': duplicate concept '{}' collapsed", version_, entry);
            continue;
        }
        concepts_.push_back(std::move(entry));
    }
}

std::optional<std::size_t> ConceptLexicon::index_of(std::string_view adjective) const {
    const std::string key = text::normalize_concept(adjective);
    for (std::size_t i = 0; i < concepts_.size(); ++i) {
        if (text::normalize_concept(concepts_[i]) == key) return i;
    }
    return std::nullopt;
}

ConceptLexicon parse_lexicon(std::string_view contents, std::string fallback_version) {
    if (!text::is_valid_utf8(contents)) throw InvalidInput("lexicon is not valid UTF-8");

    std::vector<std::string> entries;
    std::string version;
    for (const auto& raw_line : text::split(contents, '\n')) {
        std::string line = raw_line;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            const std::string comment = text::trim(std::string_view(line).substr(hash + 1));
            if (comment.rfind("version:", 0) == 0 && version.empty()) {
                version = text::trim(std::string_view(comment).substr(8));
            }
            line.resize(hash);
        }
        line = text::trim(line);
        if (!line.empty()) entries.push_back(std::move(line));
    }
    if (entries.empty()) throw EmptyLexicon("lexicon contains no concepts");

    if (version.empty()) version = std::move(fallback_version);
    if (!version.empty()) return ConceptLexicon(std::move(entries), std::move(version));
    // Hash the deduplicated entries so duplicates do not change the version.
    const ConceptLexicon unversioned(std::move(entries), "");
    std::string keys;
    for (const auto& e : unversioned.concepts()) keys += text::normalize_concept(e) + '\n';
    return ConceptLexicon(unversioned.concepts(), "file-" + text::sha256_hex(keys).substr(0, 12));
}

ConceptLexicon load_lexicon(const std::string& source) {
    if (source == kDefaultLexiconTag) {
        return parse_lexicon(default_lexicon_text(), std::string(kDefaultLexiconTag));
    }
    return parse_lexicon(text::read_file(source));
}

std::string serialize_lexicon(const ConceptLexicon& lexicon) {
    std::string out = "# version: " + lexicon.version() + "\n";
    for (const auto& c : lexicon.concepts()) out += c + "\n";
    return out;
}

ConceptLexicon merge_lexicons(const ConceptLexicon& a, const ConceptLexicon& b) {
    std::vector<std::string> all = a.concepts();
    all.insert(all.end(), b.concepts().begin(), b.concepts().end());
    std::string version = a.version();
    if (!b.version().empty() && b.version() != a.version()) version += "+" + b.version();
    return ConceptLexicon(std::move(all), std::move(version));
}

LexiconPromptSpec render_generation_prompt(Task task) {
    switch (task) {
        case Task::identification:
            return {task,
                    "Provide me with 50 adjectives that can be used to describe and distinguish "
                    "classes in a binary classification task where systems must decide whether "
                    "or not a given tweet is sexist. The following classes are defined:\n"
                    "- Sexist, as in: “Woman driving, be careful!”\n"
                    "- Non-sexist, as in: “Just saw a woman wearing a mask outside spank "
                    "her very tightly leashed dog and I gotta say I love learning absolutely "
                    "everything about a stranger in a single instant.”"};
        case Task::intention:
            return {task,
                    "Provide me with 50 adjectives that can be used to describe and distinguish "
                    "classes in a task that aims to categorize the message according to the "
                    "intention of the author. It is a ternary classification task: (i) direct "
                    "sexist message, (ii) reported sexist message and (iii) judgmental message. "
                    "This distinction allows to differentiate sexism that is actually taking "
                    "place in online platforms from sexism which is being suffered by women in "
                    "other situations but that is being reported in social networks with the aim "
                    "of complaining and fighting against sexism. The following classes are "
                    "defined:\n"
                    "- Direct sexist message: the intention was to write a message that is "
                    "sexist by itself or incites to be sexist, as in: “A woman needs love, "
                    "to fill the fridge, if a man can give this to her in return for her "
                    "services (housework, cooking, etc), I don’t see what else she "
                    "needs.”\n"
                    "- Reported sexist message: the intention is to report and share a sexist "
                    "situation suffered by a woman or women in first or third person, as in: "
                    "“Today, one of my year 1 class pupils could not believe he’d lost "
                    "a race against a girl.”\n"
                    "- Judgmental message: the intention is judgmental, since the tweet "
                    "describes sexist situations or behaviors with the aim of condemning them, "
                    "as in: “21st century and we are still earning 25% less than men "
                    "#Idonotrenounce.”"};
        case Task::categorization:
            return {task,
                    "Many facets of a woman’s life may be the focus of sexist attitudes "
                    "including domestic and parenting roles, career opportunities, sexual "
                    "image, and life expectations, to name a few. Provide me with 50 adjectives "
                    "that can be used to describe and distinguish following classes:\n"
                    "- Ideological and inequality: this category includes tweets that discredit "
                    "the feminist movement in order to devalue and defame the struggle of women "
                    "in any aspect of their lives. It also includes tweets that reject "
                    "inequality between men and women, or present men as victims of "
                    "gender-based oppression. As in: “Think the whole equality thing is "
                    "getting out of hand. We are different, that’s how we’re "
                    "made!”\n"
                    "- Stereotyping and dominance: this category includes messages that express "
                    "false ideas about women that suggest they are more suitable or "
                    "inappropriate for certain tasks. It also includes any claim that implies "
                    "that men are somehow superior to women. As in: “Most women no longer "
                    "have the desire or the knowledge to develop a high quality character, even "
                    "if they wanted to.”\n"
                    "- Objectification: Objectification and physical stereotyping include "
                    "messages where women are presented as objects apart from their dignity and "
                    "personal aspects. We also include messages that assume or describe certain "
                    "physical qualities that women must have in order to fulfill traditional "
                    "gender roles, for example, ideas that suggest that women should maintain a "
                    "standard and ideal of beauty or attacks on a woman’s body. As in: "
                    "“No offense but I’ve never seen an attractive African American "
                    "hooker. Not a single one.”\n"
                    "- Sexual violence: this category includes messages where sexual "
                    "suggestions, requests or harassment of a sexual nature (rape or sexual "
                    "assault) are made, as in: “I wanna touch your tits..you can’t "
                    "imagine what I can do on your body.”\n"
                    "- Misogyny and non-sexual violence: this category includes expressions of "
                    "hatred and violence towards women, as in: “Domestic abuse is never "
                    "okay... Unless your wife is a bitch.”"};
    }
    throw InvalidTask("unknown task");
}

LexiconPromptSpec render_generation_prompt(std::string_view id) {
    return render_generation_prompt(parse_task(id));
}

}  // namespace scbm
