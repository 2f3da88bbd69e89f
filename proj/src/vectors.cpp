#include "scbm/vectors.hpp"

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

constexpr std::string_view kMagic = "#scbm-vectors v1";

}  // namespace

std::string export_vectors(const std::vector<ConceptVector>& vectors, const ConceptLexicon& lexicon) {
    std::string out;
    out += std::string(kMagic) + " lexicon=" + lexicon.version() + "\n";
    out += "instance_id\tpersona_id";
    for (const auto& c : lexicon.concepts()) out += "\t" + c;
    out += "\n";
    for (const auto& v : vectors) {
        if (v.scores.size() != lexicon.size()) {
            throw ShapeError("vector for '" + v.instance_id + "' has " +
                             std::to_string(v.scores.size()) + " scores, lexicon has " +
                             std::to_string(lexicon.size()));
        }
        out += v.instance_id + "\t" + v.persona_id.value_or("");
        for (const double s : v.scores) out += "\t" + text::format_double(s);
        out += "\n";
    }
    return out;
}

VectorTable parse_vectors(std::string_view contents) {
    VectorTable table;
    const auto lines = text::split(contents, '\n');
    std::size_t i = 0;
    if (i < lines.size() && lines[i].rfind(kMagic, 0) == 0) {
        const auto pos = lines[i].find("lexicon=");
        if (pos != std::string::npos) table.lexicon_version = text::trim(lines[i].substr(pos + 8));
        ++i;
    }
    while (i < lines.size() && !lines[i].empty() && lines[i][0] == '#') ++i;
    if (i >= lines.size()) throw InvalidInput("vector file has no header row");

    auto header = text::split(lines[i++], '\t');
    if (header.size() < 3 || header[0] != "instance_id" || header[1] != "persona_id") {
        throw InvalidInput("vector file header must start with instance_id, persona_id");
    }
    table.adjectives.assign(header.begin() + 2, header.end());
    const std::size_t dim = table.adjectives.size();

    for (; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = text::split(lines[i], '\t');
        if (cells.size() != dim + 2) {
            throw ShapeError("vector row " + std::to_string(i + 1) + " has " +
                             std::to_string(cells.size() - 2) + " scores, expected " +
                             std::to_string(dim));
        }
        ConceptVector v;
        v.instance_id = cells[0];
        if (!cells[1].empty()) v.persona_id = cells[1];
        v.lexicon_version = table.lexicon_version;
        v.scores.reserve(dim);
        for (std::size_t k = 2; k < cells.size(); ++k) v.scores.push_back(text::parse_double(cells[k]));
        table.rows.push_back(std::move(v));
    }
    return table;
}

VectorTable load_vectors(const std::string& path) { return parse_vectors(text::read_file(path)); }

}  // namespace scbm
