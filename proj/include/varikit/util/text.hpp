#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace varikit {

inline bool is_space_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Maximal runs of non-whitespace bytes. This is the project-wide word
// definition (word counts, fertility denominators, shingles).
std::vector<std::string_view> split_words(std::string_view text);

size_t count_words(std::string_view text);

// Collapses every whitespace run to a single space and trims the ends.
std::string collapse_whitespace(std::string_view text);

std::string ascii_lower(std::string_view s);

// Decodes one UTF-8 codepoint starting at `i`; advances `i`. Returns
// 0xFFFD on malformed input (and advances by one byte).
uint32_t utf8_next(std::string_view s, size_t& i);

void utf8_append(std::string& out, uint32_t cp);

bool utf8_valid(std::string_view s);

std::vector<uint32_t> utf8_decode(std::string_view s);

std::string utf8_encode(const std::vector<uint32_t>& cps);

}  // namespace varikit
