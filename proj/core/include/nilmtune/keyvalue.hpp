#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nilmtune {

/// One `key = value` line. `#` starts a comment.
struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Parses the flat key-value text format used by config, manifest and
/// synthetic-house files. Duplicate keys are rejected.
std::vector<KeyValue> parse_key_values(std::istream& in, const std::string& source);
std::vector<KeyValue> read_key_value_file(const std::filesystem::path& path);

/// Splits on `sep`, trimming blanks and dropping empty items.
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace nilmtune
