#include "hyperrag/text.hpp"

#include <cctype>

namespace hyperrag::text {

namespace {

bool is_space_cp(char32_t cp) noexcept {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x3000 || cp == 0x00A0;
}

bool is_word_cp(char32_t cp) noexcept {
    if (cp < 0x80) return std::isalnum(static_cast<unsigned char>(cp)) != 0;
    // Non-ASCII letters (accented Latin, Greek, ...) count as word characters;
    // CJK is handled separately by callers.
    return !is_space_cp(cp) && !(cp >= 0x2000 && cp <= 0x206F) && !(cp >= 0x3000 && cp <= 0x303F) &&
           !(cp >= 0xFF00 && cp <= 0xFF0F);
}

} // namespace

char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t i) -> int {
        if (pos + i >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[pos + i]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    for (int i = 1; i < len; ++i) {
        const int c = cont(static_cast<std::size_t>(i));
        if (c < 0) {
            len = 0;
            break;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    if (len == 0) {
        ++pos;
        return b0;
    }
    pos += static_cast<std::size_t>(len);
    return cp;
}

bool is_cjk(char32_t cp) noexcept {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xAC00 && cp <= 0xD7AF);
}

std::vector<TokenSpan> tokenize(std::string_view s, TokenizerMode mode) {
    std::vector<TokenSpan> out;
    std::size_t pos = 0;
    std::size_t word_begin = std::string_view::npos;
    auto close_word = [&](std::size_t at) {
        if (word_begin != std::string_view::npos) {
            out.push_back({word_begin, at});
            word_begin = std::string_view::npos;
        }
    };
    while (pos < s.size()) {
        const std::size_t start = pos;
        const char32_t cp = next_code_point(s, pos);
        if (is_space_cp(cp)) {
            close_word(start);
            continue;
        }
        const bool single = mode == TokenizerMode::Character ||
                            (mode == TokenizerMode::Auto && is_cjk(cp));
        if (single) {
            close_word(start);
            out.push_back({start, pos});
        } else if (word_begin == std::string_view::npos) {
            word_begin = start;
        }
    }
    close_word(s.size());
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string fold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isspace(u)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(u)));
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t start = pos;
        const char32_t cp = next_code_point(s, pos);
        if (is_cjk(cp)) {
            if (!current.empty()) out.push_back(std::move(current)), current.clear();
            out.emplace_back(s.substr(start, pos - start));
        } else if (is_word_cp(cp)) {
            if (cp < 0x80) {
                current.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
            } else {
                current.append(s.substr(start, pos - start));
            }
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::size_t word_count(std::string_view s) {
    return tokenize(s, TokenizerMode::Whitespace).size();
}

bool contains_folded(std::string_view haystack, std::string_view needle) {
    return fold(haystack).find(fold(needle)) != std::string::npos;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace hyperrag::text
