#include "scbm/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "scbm/error.hpp"

namespace scbm::text {
namespace {

// Decodes one code point starting at s[i]. Returns the number of bytes
// consumed, or 0 if the sequence is malformed.
std::size_t decode(std::string_view s, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    std::size_t len = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
        min = 0x10000;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    return len;
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

void fold_into(char32_t cp, std::string& out) {
    if (cp >= 'A' && cp <= 'Z') {
        cp += 0x20;
    } else if (cp == 0xDF) {  // sharp s folds to "ss"
        out += "ss";
        return;
    } else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
        cp += 0x20;
    } else if (cp >= 0x100 && cp <= 0x137) {
        if (cp == 0x130) {  // dotted capital I
            out += "i\xCC\x87";
            return;
        }
        cp |= 1;
    } else if (cp >= 0x139 && cp <= 0x148) {
        if (cp % 2 == 1) cp += 1;
    } else if (cp >= 0x14A && cp <= 0x177) {
        cp |= 1;
    } else if (cp == 0x178) {
        cp = 0xFF;
    } else if (cp >= 0x179 && cp <= 0x17E) {
        if (cp % 2 == 1) cp += 1;
    } else if (cp == 0x17F) {
        cp = 's';
    } else if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) {
        cp += 0x20;
    } else if (cp == 0x3C2) {  // final sigma
        cp = 0x3C3;
    } else if (cp >= 0x410 && cp <= 0x42F) {
        cp += 0x20;
    } else if (cp >= 0x400 && cp <= 0x40F) {
        cp += 0x50;
    }
    encode(cp, out);
}

bool is_trim_space(std::string_view s, std::size_t i, std::size_t& len) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        len = 1;
        return true;
    }
    if (i + 1 < s.size() && static_cast<unsigned char>(c) == 0xC2 &&
        static_cast<unsigned char>(s[i + 1]) == 0xA0) {
        len = 2;
        return true;
    }
    return false;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    char32_t cp = 0;
    for (std::size_t i = 0; i < s.size();) {
        const std::size_t n = decode(s, i, cp);
        if (n == 0) return false;
        i += n;
    }
    return true;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t len = 0;
    while (begin < s.size() && is_trim_space(s, begin, len)) begin += len;
    std::size_t end = s.size();
    while (end > begin) {
        if (is_trim_space(s, end - 1, len)) {
            end -= 1;
        } else if (end - begin >= 2 && is_trim_space(s, end - 2, len) && len == 2) {
            end -= 2;
        } else {
            break;
        }
    }
    return std::string(s.substr(begin, end - begin));
}

std::string fold_case(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    char32_t cp = 0;
    for (std::size_t i = 0; i < s.size();) {
        const std::size_t n = decode(s, i, cp);
        if (n == 0) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        fold_into(cp, out);
        i += n;
    }
    return out;
}

std::string normalize_concept(std::string_view s) {
    const std::string folded = fold_case(trim(s));
    std::string out;
    out.reserve(folded.size());
    char32_t cp = 0;
    for (std::size_t i = 0; i < folded.size();) {
        const std::size_t n = decode(folded, i, cp);
        if (n == 0) {
            out.push_back(folded[i]);
            ++i;
            continue;
        }
        if (cp == 0x2010 || cp == 0x2011 || cp == 0x2212) {
            out.push_back('-');
        } else {
            out.append(folded, i, n);
        }
        i += n;
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> sha256(std::string_view bytes) {
    std::vector<std::uint8_t> digest(32);
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw Error("SHA-256 computation failed");
    }
    return digest;
}

std::string sha256_hex(std::string_view bytes) { return to_hex(sha256(bytes)); }

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0F]);
    }
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidInput("not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace scbm::text
