#include "halo/attrib.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

bool is_image_col(const std::string& c) {
  return c == kImageToken || c.rfind("<Img:", 0) == 0;
}

// Display label: a bare space token reads as <sp>.
std::string label(const std::string& token) {
  if (token == " " || token == "▁") return "<sp>";
  return token;
}

}  // namespace

GradientMatrix GradientMatrix::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  GradientMatrix g;
  for (const char* key : {"rows", "cols", "values"}) {
    if (!j.contains(key)) throw ParseError(path.string() + ": missing key '" + key + "'");
  }
  try {
    g.rows = j.at("rows").get<std::vector<std::string>>();
    g.cols = j.at("cols").get<std::vector<std::string>>();
    g.values = j.at("values").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::type_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (g.values.size() != g.rows.size()) {
    throw ShapeError(path.string() + ": values has " + std::to_string(g.values.size()) +
                     " rows, expected " + std::to_string(g.rows.size()));
  }
  for (std::size_t r = 0; r < g.values.size(); ++r) {
    if (g.values[r].size() > g.cols.size()) {
      throw ShapeError(path.string() + ": row " + std::to_string(r) + " has " +
                       std::to_string(g.values[r].size()) + " values for " +
                       std::to_string(g.cols.size()) + " columns");
    }
  }
  return g;
}

NormScheme parse_norm_scheme(std::string_view s) {
  if (s == "l1") return NormScheme::l1;
  if (s == "minmax") return NormScheme::minmax;
  throw ArgumentError("unknown normalization scheme '" + std::string(s) + "'");
}

AttentionMatrix normalize_attention(const GradientMatrix& g, NormScheme scheme) {
  if (g.values.size() != g.rows.size()) throw ShapeError("gradient rows and values disagree");

  // Column plan: every patch column maps to the single <Img> slot.
  AttentionMatrix a;
  a.rows = g.rows;
  std::vector<int> target(g.cols.size());
  int img_slot = -1;
  std::size_t patches = 0;
  for (std::size_t c = 0; c < g.cols.size(); ++c) {
    if (is_image_col(g.cols[c])) {
      if (img_slot < 0) {
        img_slot = static_cast<int>(a.cols.size());
        a.cols.emplace_back(kImageToken);
      }
      target[c] = img_slot;
      ++patches;
    } else {
      target[c] = static_cast<int>(a.cols.size());
      a.cols.push_back(g.cols[c]);
    }
  }

  for (std::size_t r = 0; r < g.values.size(); ++r) {
    const auto& raw = g.values[r];
    if (raw.size() > g.cols.size()) {
      throw ShapeError("row " + std::to_string(r) + " is longer than the column list");
    }
    std::vector<double> row(a.cols.size(), 0.0);
    for (std::size_t c = 0; c < raw.size(); ++c) {
      if (!std::isfinite(raw[c]) || raw[c] < 0.0) {
        throw DomainError("gradient value at (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") is negative or not finite");
      }
      row[static_cast<std::size_t>(target[c])] += raw[c];
    }
    if (img_slot >= 0 && patches > 1) row[static_cast<std::size_t>(img_slot)] /= static_cast<double>(patches);

    bool degenerate = false;
    if (scheme == NormScheme::l1) {
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      if (sum > 0.0) {
        for (double& v : row) v /= sum;
      } else {
        degenerate = true;
      }
    } else {
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      const double min = row.empty() ? 0.0 : *lo;
      const double span = row.empty() ? 0.0 : *hi - *lo;
      if (span > 0.0) {
        for (double& v : row) v = (v - min) / span;
      } else {
        std::fill(row.begin(), row.end(), 0.0);
        degenerate = true;
      }
    }
    a.values.push_back(std::move(row));
    a.degenerate.push_back(degenerate);
  }
  return a;
}

std::string heatmap_svg(const AttentionMatrix& a) {
  if (a.rows.empty() || a.cols.empty()) throw ShapeError("heatmap of an empty matrix");
  constexpr int kCell = 32;
  constexpr int kCharW = 7;
  std::size_t longest_ctx = 0;
  for (const auto& c : a.cols) longest_ctx = std::max(longest_ctx, label(c).size());
  std::size_t longest_gen = 0;
  for (const auto& r : a.rows) longest_gen = std::max(longest_gen, label(r).size());
  const int left = 12 + kCharW * static_cast<int>(longest_ctx);
  const int top = 12;
  const int grid_w = kCell * static_cast<int>(a.rows.size());
  const int grid_h = kCell * static_cast<int>(a.cols.size());
  const int width = left + grid_w + 12;
  const int height = top + grid_h + 16 + kCharW * static_cast<int>(longest_gen);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"monospace\" "
      << "font-size=\"11\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  // x: generated token (matrix row); y: context token (matrix column).
  for (std::size_t gi = 0; gi < a.rows.size(); ++gi) {
    for (std::size_t ci = 0; ci < a.cols.size(); ++ci) {
      const double v = std::clamp(a.values[gi][ci], 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      svg << "<rect x=\"" << left + kCell * static_cast<int>(gi) << "\" y=\""
          << top + kCell * static_cast<int>(ci) << "\" width=\"" << kCell << "\" height=\""
          << kCell << "\" fill=\"rgb(255," << shade << ',' << shade
          << ")\" stroke=\"#dddddd\" data-row=\"" << gi << "\" data-col=\"" << ci
          << "\" data-value=\"" << text::fixed(v, 6) << "\"/>\n";
    }
  }
  for (std::size_t ci = 0; ci < a.cols.size(); ++ci) {
    svg << "<text x=\"" << left - 4 << "\" y=\"" << top + kCell * static_cast<int>(ci) + kCell / 2 + 4
        << "\" text-anchor=\"end\">" << text::xml_escape(label(a.cols[ci])) << "</text>\n";
  }
  for (std::size_t gi = 0; gi < a.rows.size(); ++gi) {
    const int x = left + kCell * static_cast<int>(gi) + kCell / 2;
    const int y = top + grid_h + 8;
    svg << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(90 " << x << ' ' << y
        << ")\">" << text::xml_escape(label(a.rows[gi])) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void render_heatmap(const AttentionMatrix& a, const std::filesystem::path& path) {
  text::write_file(path, heatmap_svg(a));
}

}  // namespace halo
