#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epicast::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line number in the file
};

// Reads a whole CSV file: comma-separated, no quoting (none of the project
// schemas need it), CRLF tolerated, empty lines skipped.
std::vector<Row> read_file(const std::string& path);

// Shortest round-trip representation via std::to_chars, so values written to
// stage artifacts parse back bit-exact.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

}  // namespace epicast::csv
