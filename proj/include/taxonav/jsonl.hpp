#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace taxonav {

// Parses one JSON object per line, skipping blank lines.
// Throws ValidationError(InvalidInput) with the 1-based line number on bad JSON
// or on a line that is not an object.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

// Writes content to path atomically: a sibling temp file is written and
// fsync'd, then renamed over the target so readers never observe a partial
// file.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace taxonav
