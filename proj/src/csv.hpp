#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace delaychain::csv {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
// Surrounding whitespace and a trailing '\r' are trimmed from unquoted fields.
std::vector<std::string> split(std::string_view line);

std::string_view trim(std::string_view text);

// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace delaychain::csv
