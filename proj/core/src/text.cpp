#include "malens/text.hpp"

#include <array>
#include <utility>

namespace malens::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr char32_t kZeroWidthJoiner = 0x200D;

// Base letters for U+00C0..U+00FF and U+0100..U+017F; '?' keeps the code point.
constexpr std::string_view kLatin1Base =
    "AAAAAA?CEEEEIIII"
    "?NOOOOO?OUUUUY??"
    "aaaaaa?ceeeeiiii"
    "?nooooo?ouuuuy?y";
constexpr std::string_view kLatinExtABase =
    "AaAaAaCcCcCcCcDd"
    "DdEeEeEeEeEeGgGg"
    "GgGgHhHhIiIiIiIi"
    "Ii??JjKk?LlLlLlL"
    "lLlNnNnNn???OoOo"
    "Oo??RrRrRrSsSsSs"
    "SsTtTtTtUuUuUuUu"
    "UuUuWwYyYZzZzZz?";

bool in(char32_t cp, char32_t lo, char32_t hi) noexcept { return cp >= lo && cp <= hi; }

}  // namespace

void append_utf8(std::string& out, char32_t cp) {
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

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = i + static_cast<std::size_t>(extra) < s.size();
    for (int k = 1; ok && k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      else cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_whitespace(char32_t cp) noexcept {
  return cp == ' ' || in(cp, 0x09, 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         in(cp, 0x2000, 0x200B) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000 || cp == 0xFEFF;
}

bool is_punctuation(char32_t cp) noexcept {
  if (cp < 0x80) {
    return in(cp, 0x21, 0x2F) || in(cp, 0x3A, 0x40) || in(cp, 0x5B, 0x60) || in(cp, 0x7B, 0x7E);
  }
  return cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB6 || cp == 0xB7 || cp == 0xBB ||
         cp == 0xBF || cp == 0x37E || cp == 0x387 || in(cp, 0x55A, 0x55F) || cp == 0x589 ||
         cp == 0x5BE || cp == 0x60C || cp == 0x61B || cp == 0x61F || cp == 0x6D4 ||
         in(cp, 0x964, 0x965) || cp == 0xE4F || in(cp, 0xE5A, 0xE5B) || in(cp, 0x2010, 0x2027) ||
         in(cp, 0x2030, 0x205E) || in(cp, 0x3001, 0x3003) || in(cp, 0x3008, 0x3011) ||
         in(cp, 0x3014, 0x301F) || cp == 0x30FB || in(cp, 0xFF01, 0xFF0F) ||
         in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65);
}

bool is_combining_mark(char32_t cp) noexcept {
  return in(cp, 0x300, 0x36F) || in(cp, 0x483, 0x489) || in(cp, 0x591, 0x5BD) ||
         cp == 0x5BF || in(cp, 0x5C1, 0x5C2) || in(cp, 0x5C4, 0x5C5) || cp == 0x5C7 ||
         in(cp, 0x610, 0x61A) || in(cp, 0x64B, 0x65F) || cp == 0x670 || in(cp, 0x6D6, 0x6DC) ||
         in(cp, 0x6DF, 0x6E4) || in(cp, 0x6E7, 0x6E8) || in(cp, 0x6EA, 0x6ED) ||
         in(cp, 0x900, 0x903) || in(cp, 0x93A, 0x93C) || in(cp, 0x93E, 0x94F) ||
         in(cp, 0x951, 0x957) || in(cp, 0x962, 0x963) || in(cp, 0x981, 0x983) || cp == 0x9BC ||
         in(cp, 0x9BE, 0x9CD) || cp == 0x9D7 || in(cp, 0x9E2, 0x9E3) || cp == 0xB82 ||
         in(cp, 0xBBE, 0xBC2) || in(cp, 0xBC6, 0xBC8) || in(cp, 0xBCA, 0xBCD) || cp == 0xBD7 ||
         cp == 0xE31 || in(cp, 0xE34, 0xE3A) || in(cp, 0xE47, 0xE4E) || cp == 0xEB1 ||
         in(cp, 0xEB4, 0xEBC) || in(cp, 0xEC8, 0xECD) || in(cp, 0x1160, 0x11FF) ||
         in(cp, 0x1AB0, 0x1AFF) || in(cp, 0x1DC0, 0x1DFF) || in(cp, 0x20D0, 0x20FF) ||
         in(cp, 0x302A, 0x302F) || in(cp, 0x3099, 0x309A) || in(cp, 0xFE00, 0xFE0F) ||
         in(cp, 0xFE20, 0xFE2F) || in(cp, 0x1F3FB, 0x1F3FF) || in(cp, 0xE0100, 0xE01EF);
}

char32_t to_lower(char32_t cp) noexcept {
  if (in(cp, 'A', 'Z')) return cp + 32;
  if (cp < 0xC0) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 32;
  if (in(cp, 0x100, 0x17F)) {
    if (cp == 0x130) return 'i';
    if (cp == 0x178) return 0xFF;
    if (in(cp, 0x100, 0x12F) || in(cp, 0x132, 0x137) || in(cp, 0x14A, 0x177)) {
      return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
    return cp;
  }
  if (cp == 0x386) return 0x3AC;
  if (in(cp, 0x388, 0x38A)) return cp + 37;
  if (cp == 0x38C) return 0x3CC;
  if (in(cp, 0x38E, 0x38F)) return cp + 63;
  if (in(cp, 0x391, 0x3AB) && cp != 0x3A2) return cp + 32;
  if (in(cp, 0x400, 0x40F)) return cp + 80;
  if (in(cp, 0x410, 0x42F)) return cp + 32;
  if (in(cp, 0x460, 0x481) || in(cp, 0x48A, 0x4BF)) return (cp % 2 == 0) ? cp + 1 : cp;
  if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF)) return (cp % 2 == 0) ? cp + 1 : cp;
  if (in(cp, 0xFF21, 0xFF3A)) return cp + 32;
  return cp;
}

std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : decode_utf8(s)) append_utf8(out, to_lower(cp));
  return out;
}

std::string strip_marks(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : decode_utf8(s)) {
    if (is_combining_mark(cp)) continue;
    char base = '?';
    if (in(cp, 0xC0, 0xFF)) base = kLatin1Base[cp - 0xC0];
    else if (in(cp, 0x100, 0x17F)) base = kLatinExtABase[cp - 0x100];
    if (base != '?') out.push_back(base);
    else append_utf8(out, cp);
  }
  return out;
}

std::string strip_token_markers(std::string_view token) {
  std::u32string cps = decode_utf8(token);
  auto is_marker = [](char32_t cp) {
    return cp == 0x2581 || cp == 0x120 || cp == 0x10A || is_whitespace(cp);
  };
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_marker(cps[b])) ++b;
  while (e > b && is_marker(cps[e - 1])) --e;
  if (e - b >= 2 && cps[b] == '#' && cps[b + 1] == '#') b += 2;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string trim(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_whitespace(cps[b])) ++b;
  while (e > b && is_whitespace(cps[e - 1])) --e;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string trim_punctuation(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_punctuation(cps[b])) ++b;
  while (e > b && is_punctuation(cps[e - 1])) --e;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  for (char32_t cp : decode_utf8(s)) {
    if (is_whitespace(cp)) {
      if (!current.empty()) words.push_back(std::exchange(current, {}));
    } else {
      append_utf8(current, cp);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> grapheme_clusters(std::string_view s) {
  std::vector<std::string> clusters;
  bool join_next = false;
  for (char32_t cp : decode_utf8(s)) {
    if (is_whitespace(cp)) {
      join_next = false;
      continue;
    }
    const bool extends = is_combining_mark(cp) || cp == kZeroWidthJoiner || join_next;
    if (extends && !clusters.empty()) append_utf8(clusters.back(), cp);
    else clusters.emplace_back(encode_utf8(std::u32string(1, cp)));
    join_next = (cp == kZeroWidthJoiner);
  }
  return clusters;
}

}  // namespace malens::text
