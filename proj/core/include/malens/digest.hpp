#pragma once

#include <string>
#include <string_view>

namespace malens {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace malens
