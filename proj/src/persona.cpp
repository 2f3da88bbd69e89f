#include "scbm/persona.hpp"

#include <algorithm>
#include <cctype>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string render_gender(const std::string& raw) {
    const std::string g = text::fold_case(text::trim(raw));
    if (g == "m" || g == "male" || g == "man") return "man";
    if (g == "f" || g == "female" || g == "woman") return "woman";
    return g;
}

std::string render_age(const std::string& raw) {
    const std::string a = text::trim(raw);
    if (a == "46+") return "above 45 years old";
    if (a.size() > 1 && a.back() == '+' && all_digits(a.substr(0, a.size() - 1))) {
        return "above " + a.substr(0, a.size() - 1) + " years old";
    }
    if (const auto dash = a.find('-'); dash != std::string::npos) {
        const std::string lo = a.substr(0, dash);
        const std::string hi = a.substr(dash + 1);
        if (all_digits(lo) && all_digits(hi)) return "between " + lo + " and " + hi + " years old";
    }
    return a + " years old";
}

std::string render_education(const std::string& raw) {
    const std::string e = text::trim(raw);
    if (text::fold_case(e).find("degree") != std::string::npos) return e;
    return e + " degree";
}

}  // namespace

std::string render_persona(const AnnotatorProfile& p) {
    for (const auto* field : {&p.gender, &p.age_group, &p.ethnicity, &p.education, &p.country}) {
        if (text::trim(*field).empty()) {
            throw InvalidInput("annotator profile requires gender, age group, ethnicity, "
                               "education and country");
        }
    }
    return "You are a " + render_gender(p.gender) + " aged " + render_age(p.age_group) + " with " +
           text::trim(p.ethnicity) + " ethnicity with a " + render_education(p.education) +
           " coming from " + text::trim(p.country);
}

}  // namespace scbm
