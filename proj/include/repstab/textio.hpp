#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace repstab {

// Shortest decimal form that parses back to the same double. Locale
// independent, '.' separator always.
std::string format_double(double v);

// Strict parse of a full token; throws FormatError on trailing garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_whitespace(std::string_view line);

// Lowercases ASCII letters and strips leading/trailing punctuation.
// Embedding lookups and lexicon matching share this normalization.
std::string normalize_token(std::string_view token);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace repstab
