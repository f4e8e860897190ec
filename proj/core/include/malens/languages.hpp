#pragma once

#include <string_view>

namespace malens {

/// Code returned by language identification when the provider abstains.
inline constexpr std::string_view kUndetermined = "und";

/// True for the 183 two-letter ISO 639-1 codes (lowercase).
bool is_iso639_1(std::string_view code) noexcept;

}  // namespace malens
