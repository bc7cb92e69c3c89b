#include "medrec/csv.hpp"

#include <algorithm>
#include <cctype>

namespace medrec::csv {

namespace {

bool is_foreign_separator(char c) { return c == ';' || c == '\t' || c == '|'; }

}  // namespace

std::string normalize_delimiters(std::string_view line, std::size_t* replaced) {
  std::string out(line);
  std::size_t count = 0;
  bool quoted = false;
  for (char& c : out) {
    if (c == '"') {
      quoted = !quoted;
    } else if (!quoted && is_foreign_separator(c)) {
      c = ',';
      ++count;
    }
  }
  if (replaced != nullptr) *replaced = count;
  return out;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string quote_field(std::string_view field) {
  const bool needs_quotes = std::any_of(field.begin(), field.end(), [](char c) {
    return c == ',' || c == '"' || is_foreign_separator(c) || c == '\n' || c == '\r';
  }) || (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                            std::isspace(static_cast<unsigned char>(field.back()))));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(std::string_view s) {
  auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  if (first >= last) return {};
  return std::string(first, last);
}

bool is_null_token(std::string_view field) {
  const std::string t = trim(field);
  if (t.empty()) return true;
  std::string lower(t.size(), '\0');
  std::transform(t.begin(), t.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "null" || lower == "nan" || lower == "na";
}

}  // namespace medrec::csv
