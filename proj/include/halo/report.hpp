#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace halo {

enum class ReportLayout { table1, table2, table3, sweep, pope };

std::string_view to_string(ReportLayout l);
ReportLayout parse_layout(std::string_view s);

/// Rendered report bodies. `svg` is only filled for sweeps.
struct RenderedReport {
  std::string markdown;
  std::string svg;
};

/// Result shapes per layout:
///   table1: {models, methods, accuracy: {method: {"w/o"|"w/"|"all": {model: %}}}}
///   table2: {models, methods, prf: {method: {"w/o"|"w/": {model: {p, r, f1}}}}}
///   table3: {models, prompts, cells: {model: {prompt: %}}}
///   sweep:  {axis, model, points: [{value, percent}]}
///   pope:   {models: [{model, tally}]}
/// Missing cells throw ShapeError naming every one of them.
RenderedReport render_report(const nlohmann::json& results, ReportLayout layout);

/// Writes `path` (Markdown) and, for sweeps, the chart next to it with an
/// .svg extension. Returns the files written.
std::vector<std::filesystem::path> emit_report(const nlohmann::json& results, ReportLayout layout,
                                               const std::filesystem::path& path);

/// Line chart of ratio against axis value, points spaced evenly.
std::string sweep_chart_svg(std::string_view axis, std::string_view model,
                            const std::vector<double>& values, const std::vector<double>& percents);

/// Integers print bare ("128"); other values use the shortest %g form.
std::string format_axis_value(double v);

}  // namespace halo
