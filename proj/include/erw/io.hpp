#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace erw {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Ordered key/value metadata written at the top of every output file.
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Writes metadata as "# key=value" lines.
void write_csv_preamble(std::ostream& os, const Metadata& metadata);

/// Parses "key=value" lines. Blank lines and lines starting with '#' are
/// skipped; surrounding whitespace is trimmed. Throws DomainError on a line
/// without '=' or on a repeated key.
std::map<std::string, std::string> parse_key_value(std::string_view text);
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

/// Writes `content` to `path` ("-" means stdout). Throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace erw
