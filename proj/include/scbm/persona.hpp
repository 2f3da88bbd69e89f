#pragma once

#include <string>

namespace scbm {

// Demographic profile of one annotator, as shipped with EXIST posts.
struct AnnotatorProfile {
    std::string gender;
    std::string age_group;
    std::string ethnicity;
    std::string education;
    std::string country;

    friend bool operator==(const AnnotatorProfile&, const AnnotatorProfile&) = default;
};

// "You are a man aged above 45 years old with latino ethnicity with a
// Bachelor's degree coming from Mexico"
//
// Gender codes M/F (and male/female) become man/woman. Age groups "A-B"
// become "between A and B years old", "N+" becomes "above N years old", and
// the EXIST group "46+" becomes "above 45 years old". Education gets a
// trailing " degree" unless it already mentions one.
std::string render_persona(const AnnotatorProfile& profile);

}  // namespace scbm
