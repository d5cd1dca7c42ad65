#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hyperrag::text {

/// Byte range [begin, end) of one token inside its source string.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

enum class TokenizerMode {
    Auto,       // words for space-separated text, one token per CJK character
    Whitespace, // whitespace-delimited words only
    Character,  // every non-space code point is a token
};

std::vector<TokenSpan> tokenize(std::string_view text, TokenizerMode mode = TokenizerMode::Auto);

/// Lowercase ASCII, trim, collapse internal whitespace runs to one space.
std::string fold(std::string_view s);

std::string trim(std::string_view s);

/// Lowercased alphanumeric words (and single CJK characters) used by the
/// hashing embedder and the mock backends.
std::vector<std::string> words(std::string_view s);

/// Word count used for context budgets: whitespace-delimited runs.
std::size_t word_count(std::string_view s);

bool contains_folded(std::string_view haystack, std::string_view needle);

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0) noexcept;

/// Decode the code point starting at `pos`; advances `pos`. Invalid bytes decode
/// as themselves so that malformed input never loops.
char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept;

bool is_cjk(char32_t cp) noexcept;

} // namespace hyperrag::text
