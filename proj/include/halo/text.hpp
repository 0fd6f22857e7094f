#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace halo::text {

std::string to_lower(std::string_view s);

/// Lowercase alphanumeric runs. Everything else is a separator, so word
/// boundaries fall on spaces, punctuation and hyphens alike.
std::vector<std::string> words(std::string_view s);

/// First run of ASCII letters, lowercased; empty when there is none.
std::string first_alpha_token(std::string_view s);

/// Regular English plural of a single lowercase noun. Irregular nouns
/// (person, knife, mouse, ...) come from a fixed table.
std::string pluralize(std::string_view noun);

/// Word sequences that count as a mention of `term`: the term itself and the
/// term with its last word pluralized.
std::vector<std::vector<std::string>> surface_forms(std::string_view term);

/// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle);

/// Case-insensitive, word-boundary, plural-normalized containment.
bool mentions(std::string_view text, std::string_view term);

/// "1. a\n2. b" with no trailing newline.
std::string numbered_list(const std::vector<std::string>& lines);

/// Replace every "{key}" with value.
std::string substitute(std::string_view tmpl, std::string_view key, std::string_view value);

/// Fixed-point rendering through snprintf.
std::string fixed(double v, int decimals);

std::string read_file(const std::filesystem::path& path);

/// Write through a temporary sibling and rename into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> split(std::string_view s, char sep);

/// Escapes <, >, & and " for SVG text and attributes.
std::string xml_escape(std::string_view s);

}  // namespace halo::text
