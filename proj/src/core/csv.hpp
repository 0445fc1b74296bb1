#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace flowsentry {

/// Splits one CSV line into fields. Handles double-quoted fields with doubled
/// quotes inside; no embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line);

/// Formats a double with exactly six decimal places (the frozen CSV rule).
std::string format_fixed6(double v);

}  // namespace flowsentry
