#pragma once

// Small UTF-8 helpers shared by token normalization, language-id input
// preparation, WER tokenization and the table-driven G2P mapper.

#include <string>
#include <string_view>
#include <vector>

namespace malens::text {

/// Decodes UTF-8; malformed sequences decode to U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;
/// Combining marks, variation selectors and other grapheme-extending code points.
bool is_combining_mark(char32_t cp) noexcept;

char32_t to_lower(char32_t cp) noexcept;
/// Simple (1:1) lowercase mapping over Latin, Greek and Cyrillic blocks.
std::string casefold(std::string_view s);
/// Drops combining marks and maps precomposed Latin letters to their base letter.
std::string strip_marks(std::string_view s);

/// Removes tokenizer word-boundary glyphs ("▁", "Ġ", "Ċ", "##") and surrounding
/// whitespace. Interior characters are left untouched.
std::string strip_token_markers(std::string_view token);

std::string trim(std::string_view s);
/// Trims punctuation from both ends; interior apostrophes and hyphens survive.
std::string trim_punctuation(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
/// Approximate extended grapheme clusters: a base code point followed by any
/// combining marks, joined across ZWJ. Whitespace is dropped.
std::vector<std::string> grapheme_clusters(std::string_view s);

}  // namespace malens::text
