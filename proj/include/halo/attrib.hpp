#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace halo {

inline constexpr std::string_view kImageToken = "<Img>";

/// Backend-supplied gradient magnitudes of each generated token (row) with
/// respect to its context (columns: the image, then prior tokens).
///
/// Columns labelled "<Img>" or "<Img:k>" are per-patch image positions;
/// normalization folds them into one "<Img>" column by averaging. Rows may
/// be shorter than the column list; the missing trailing cells are zero.
struct GradientMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> values;

  /// Reads {"rows", "cols", "values"} JSON. Throws IoError / ParseError /
  /// ShapeError.
  static GradientMatrix load(const std::filesystem::path& path);
};

enum class NormScheme { l1, minmax };

NormScheme parse_norm_scheme(std::string_view s);

struct AttentionMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> values;  // rectangular, in [0, 1]
  std::vector<bool> degenerate;             // row had no positive mass
};

/// Per-row normalization. With l1 every non-degenerate row sums to 1; an
/// all-zero row stays zero and is flagged. Throws DomainError on negative
/// or non-finite input.
AttentionMatrix normalize_attention(const GradientMatrix& g, NormScheme scheme = NormScheme::l1);

/// SVG heatmap: generated tokens along the horizontal axis, context tokens
/// along the vertical axis, darker cells for more attention. Output bytes
/// depend only on the matrix.
std::string heatmap_svg(const AttentionMatrix& a);

/// Writes heatmap_svg to path. Throws ShapeError on an empty matrix and
/// IoError when the path is unwritable.
void render_heatmap(const AttentionMatrix& a, const std::filesystem::path& path);

}  // namespace halo
