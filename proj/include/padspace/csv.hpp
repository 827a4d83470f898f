#pragma once

#include <string>
#include <vector>

namespace padspace {

/// Minimal strict CSV: comma-separated, newline-terminated rows, no quoting.
/// All file formats in this project are defined not to need quoting, which
/// keeps re-serialization byte-stable.
namespace csv {

/// Splits one line on ','. Does not trim whitespace.
std::vector<std::string> split_row(const std::string& line);

/// Reads all rows of a CSV file. Lines starting with '#' are skipped
/// (used for schema header comments). Throws DataError if the file is
/// missing. CRLF line ends are normalized.
std::vector<std::vector<std::string>> read_file(const std::string& path);

std::string join_row(const std::vector<std::string>& fields);

/// Formats a double with 6 significant digits, the project-wide decimal
/// convention for CSV artifacts.
std::string format_g6(double v);

/// Full-precision round-trippable formatting (model files, loss traces).
std::string format_g17(double v);

/// Strict double parse; throws DataError naming `context` on failure.
double parse_double(const std::string& s, const std::string& context);

long parse_long(const std::string& s, const std::string& context);

}  // namespace csv
}  // namespace padspace
