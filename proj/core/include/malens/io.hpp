#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace malens::io {

/// MissingFile if absent, InvalidArgument (with path) on parse errors.
nlohmann::json read_json_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temporary and rename, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Deterministic pretty-printed JSON followed by a newline.
std::string dump_json(const nlohmann::json& value);

}  // namespace malens::io
