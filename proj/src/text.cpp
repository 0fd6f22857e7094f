#include "halo/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "halo/error.hpp"

namespace halo::text {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

const std::map<std::string, std::string, std::less<>>& irregular_plurals() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"person", "people"}, {"man", "men"},         {"woman", "women"},
      {"child", "children"}, {"mouse", "mice"},     {"knife", "knives"},
      {"sheep", "sheep"},   {"broccoli", "broccoli"}, {"scissors", "scissors"},
      {"skis", "skis"},     {"foot", "feet"},       {"tooth", "teeth"},
      {"shelf", "shelves"}, {"leaf", "leaves"},     {"goose", "geese"},
      {"fish", "fish"},     {"deer", "deer"},       {"tv", "tvs"},
  };
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string first_alpha_token(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !is_alpha(s[i])) ++i;
  std::string out;
  while (i < s.size() && is_alpha(s[i])) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    ++i;
  }
  return out;
}

std::string pluralize(std::string_view noun) {
  if (auto it = irregular_plurals().find(noun); it != irregular_plurals().end()) return it->second;
  std::string n(noun);
  if (ends_with(n, "s") || ends_with(n, "x") || ends_with(n, "z") || ends_with(n, "ch") ||
      ends_with(n, "sh")) {
    return n + "es";
  }
  if (n.size() >= 2 && n.back() == 'y' && std::string_view("aeiou").find(n[n.size() - 2]) ==
                                               std::string_view::npos) {
    return n.substr(0, n.size() - 1) + "ies";
  }
  return n + "s";
}

std::vector<std::vector<std::string>> surface_forms(std::string_view term) {
  std::vector<std::string> singular = words(term);
  if (singular.empty()) return {};
  std::vector<std::string> plural = singular;
  plural.back() = pluralize(singular.back());
  if (plural == singular) return {singular};
  return {singular, plural};
}

bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

bool mentions(std::string_view text, std::string_view term) {
  const auto tokens = words(text);
  for (const auto& form : surface_forms(term)) {
    if (contains_sequence(tokens, form)) return true;
  }
  return false;
}

std::string numbered_list(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + lines[i];
  }
  return out;
}

std::string substitute(std::string_view tmpl, std::string_view key, std::string_view value) {
  const std::string needle = "{" + std::string(key) + "}";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = tmpl.find(needle, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl.substr(pos, hit - pos));
    out.append(value);
    pos = hit + needle.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t hit = s.find(sep, start);
    out.emplace_back(s.substr(start, hit == std::string_view::npos ? s.npos : hit - start));
    if (hit == std::string_view::npos) break;
    start = hit + 1;
  }
  return out;
}

}  // namespace halo::text
