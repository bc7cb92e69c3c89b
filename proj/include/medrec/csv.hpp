#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace medrec::csv {

/// Replaces semicolon, tab and pipe separators outside double quotes with commas.
/// Returns the number of replacements through `replaced` when non-null.
std::string normalize_delimiters(std::string_view line, std::size_t* replaced = nullptr);

/// Splits one comma-separated record. Double-quoted fields may contain commas;
/// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_fields(std::string_view line);

/// Quotes a field for writing when it contains a comma, quote or separator.
std::string quote_field(std::string_view field);

std::string trim(std::string_view s);

bool is_null_token(std::string_view field);

}  // namespace medrec::csv
