#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace evasion::csv {

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split(std::string_view line);

}  // namespace evasion::csv
