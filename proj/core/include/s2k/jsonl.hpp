#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace s2k {

/// Reads one JSON value per non-blank line. Throws IoError / SchemaError
/// with the offending line number.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

/// Canonical single-line serialization used for every artifact (sorted
/// keys via nlohmann's ordered std::map, no trailing spaces).
std::string dump_line(const nlohmann::json& j);

/// Writes `contents` to `path` through a sibling temp file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);

std::string read_file(const std::string& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace s2k
