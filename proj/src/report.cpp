#include "halo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "halo/error.hpp"
#include "halo/metrics.hpp"
#include "halo/popecheck.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

std::string pct(double v) { return text::fixed(round_half_up(v, 1), 1); }

std::vector<std::string> strings(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
    throw ShapeError(std::string("report results lack a non-empty '") + key + "' list");
  }
  return j.at(key).get<std::vector<std::string>>();
}

const json* find_path(const json& j, std::initializer_list<std::string> keys) {
  const json* cur = &j;
  for (const auto& k : keys) {
    if (!cur->is_object() || !cur->contains(k)) return nullptr;
    cur = &cur->at(k);
  }
  return cur;
}

void fail_missing(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::string msg = "incomplete results, missing cells:";
  for (const auto& m : missing) msg += " " + m;
  throw ShapeError(msg);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string render_table1(const json& r) {
  const auto models = strings(r, "models");
  const auto methods = strings(r, "methods");
  static const std::vector<std::string> kSubsets = {"w/o", "w/", "all"};
  std::vector<std::string> missing;
  for (const auto& me : methods)
    for (const auto& s : kSubsets)
      for (const auto& mo : models) {
        const json* c = find_path(r, {"accuracy", me, s, mo});
        if (!c || !c->is_number()) missing.push_back(me + "/" + s + "/" + mo);
      }
  fail_missing(missing);

  std::ostringstream out;
  out << "| Method |";
  for (const auto& s : kSubsets) {
    for (const auto& mo : models) out << " " << mo << " (" << s << ") |";
    out << " Avg. (" << s << ") |";
  }
  out << "\n|---|";
  for (std::size_t i = 0; i < kSubsets.size() * (models.size() + 1); ++i) out << "---:|";
  out << "\n";
  for (const auto& me : methods) {
    out << "| " << me << " |";
    for (const auto& s : kSubsets) {
      std::vector<double> vals;
      for (const auto& mo : models) {
        vals.push_back(r.at("accuracy").at(me).at(s).at(mo).get<double>());
        out << " " << pct(vals.back()) << " |";
      }
      out << " " << pct(mean(vals)) << " |";
    }
    out << "\n";
  }
  return out.str();
}

std::string render_table2(const json& r) {
  const auto models = strings(r, "models");
  const auto methods = strings(r, "methods");
  static const std::vector<std::string> kBlocks = {"w/o", "w/"};
  std::vector<std::string> missing;
  for (const auto& me : methods)
    for (const auto& b : kBlocks)
      for (const auto& mo : models)
        for (const char* f : {"p", "r", "f1"}) {
          const json* c = find_path(r, {"prf", me, b, mo, f});
          if (!c || !c->is_number()) missing.push_back(me + "/" + b + "/" + mo + "/" + f);
        }
  fail_missing(missing);

  std::ostringstream out;
  out << "| Method | Class |";
  for (const auto& mo : models) out << " " << mo << " P | " << mo << " R | " << mo << " F1 |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < models.size() * 3; ++i) out << "---:|";
  out << "\n";
  for (const auto& me : methods) {
    for (const auto& b : kBlocks) {
      out << "| " << me << " | " << b << " |";
      for (const auto& mo : models) {
        const json& c = r.at("prf").at(me).at(b).at(mo);
        out << " " << pct(c.at("p").get<double>()) << " | " << pct(c.at("r").get<double>())
            << " | " << pct(c.at("f1").get<double>()) << " |";
      }
      out << "\n";
    }
    out << "| " << me << " | average |";
    for (const auto& mo : models) {
      for (const char* f : {"p", "r", "f1"}) {
        double s = 0.0;
        for (const auto& b : kBlocks) s += r.at("prf").at(me).at(b).at(mo).at(f).get<double>();
        out << " " << pct(s / kBlocks.size()) << " |";
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string render_table3(const json& r) {
  const auto models = strings(r, "models");
  const auto prompts = strings(r, "prompts");
  std::vector<std::string> missing;
  std::map<std::string, std::map<std::string, double>> cells;
  for (const auto& mo : models)
    for (const auto& p : prompts) {
      const json* c = find_path(r, {"cells", mo, p});
      if (!c || !c->is_number()) {
        missing.push_back(mo + "/" + p);
      } else {
        cells[mo][p] = c->get<double>();
      }
    }
  fail_missing(missing);
  const RatioTable t = build_ratio_table(models, prompts, cells);

  std::ostringstream out;
  out << "| Model |";
  for (const auto& p : prompts) out << " " << p << " |";
  out << " Avg-M |\n|---|";
  for (std::size_t i = 0; i <= prompts.size(); ++i) out << "---:|";
  out << "\n";
  for (const auto& mo : models) {
    out << "| " << mo << " |";
    for (const auto& p : prompts) out << " " << pct(t.cell(mo, p)) << " |";
    out << " " << pct(t.avg_m.at(mo)) << " |\n";
  }
  out << "| Avg-P |";
  for (const auto& p : prompts) out << " " << pct(t.avg_p.at(p)) << " |";
  out << " - |\n";
  return out.str();
}

RenderedReport render_sweep(const json& r) {
  if (!r.contains("axis") || !r.contains("points") || !r.at("points").is_array()) {
    throw ShapeError("sweep results need 'axis' and 'points'");
  }
  const auto& pts = r.at("points");
  if (pts.empty()) throw ShapeError("empty sweep: no points to report");
  const std::string axis = r.at("axis").get<std::string>();
  const std::string model = r.value("model", std::string("LVLM"));
  std::vector<std::string> missing;
  std::vector<double> values, percents;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const json& p = pts[i];
    const bool ok = p.is_object() && p.contains("value") && p.at("value").is_number() &&
                    p.contains("percent") && p.at("percent").is_number();
    if (!ok) {
      missing.push_back("points[" + std::to_string(i) + "]");
      continue;
    }
    values.push_back(p.at("value").get<double>());
    percents.push_back(p.at("percent").get<double>());
  }
  fail_missing(missing);

  std::ostringstream out;
  out << "| " << axis << " |";
  for (double v : values) out << " " << format_axis_value(v) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < values.size(); ++i) out << "---:|";
  out << "\n| " << model << " |";
  for (double p : percents) out << " " << pct(p) << " |";
  out << "\n";
  return {out.str(), sweep_chart_svg(axis, model, values, percents)};
}

std::string render_pope(const json& r) {
  if (!r.contains("models") || !r.at("models").is_array() || r.at("models").empty()) {
    throw ShapeError("pope results need a non-empty 'models' list");
  }
  std::ostringstream out;
  bool first = true;
  for (const json& entry : r.at("models")) {
    const ProbeTally t = entry.at("tally").get<ProbeTally>();
    std::vector<std::string> missing;
    for (const auto& item : t.items) {
      if (!t.per_item.count(item)) missing.push_back(entry.value("model", "?") + "/" + item);
    }
    fail_missing(missing);
    if (!first) out << "\n";
    first = false;
    out << "**" << entry.at("model").get<std::string>() << "**\n\n| Item |";
    for (const auto& item : t.items) out << " " << item << " |";
    out << " sum |\n|---|";
    for (std::size_t i = 0; i <= t.items.size(); ++i) out << "---:|";
    out << "\n";
    const auto row = [&](const char* name, std::size_t ProbeCountsRow::*field) {
      out << "| " << name << " |";
      for (const auto& item : t.items) out << " " << t.per_item.at(item).*field << " |";
      out << " " << t.total.*field << " |\n";
    };
    row("QH", &ProbeCountsRow::qh);
    row("AY", &ProbeCountsRow::ay);
    row("CH", &ProbeCountsRow::ch);
    out << "\nAY/QH " << pct(t.total.qh ? t.yes_rate() : 0.0) << "%, CH/AY "
        << pct(t.total.ay ? t.hallucination_rate() : 0.0) << "%\n";
  }
  return out.str();
}

}  // namespace

std::string_view to_string(ReportLayout l) {
  switch (l) {
    case ReportLayout::table1: return "table1";
    case ReportLayout::table2: return "table2";
    case ReportLayout::table3: return "table3";
    case ReportLayout::sweep: return "sweep";
    case ReportLayout::pope: return "pope";
  }
  return "?";
}

ReportLayout parse_layout(std::string_view s) {
  for (auto l : {ReportLayout::table1, ReportLayout::table2, ReportLayout::table3,
                 ReportLayout::sweep, ReportLayout::pope}) {
    if (to_string(l) == s) return l;
  }
  throw ArgumentError("unknown report layout '" + std::string(s) + "'");
}

std::string format_axis_value(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string sweep_chart_svg(std::string_view axis, std::string_view model,
                            const std::vector<double>& values,
                            const std::vector<double>& percents) {
  if (values.empty() || values.size() != percents.size()) {
    throw ShapeError("sweep chart needs one percent per value");
  }
  constexpr double kW = 480, kH = 300, kLeft = 50, kRight = 20, kTop = 30, kBottom = 50;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  const double top_val =
      std::max(10.0, std::ceil(*std::max_element(percents.begin(), percents.end()) / 10.0) * 10.0);
  const auto x_at = [&](std::size_t i) {
    return values.size() == 1 ? kLeft + plot_w / 2
                              : kLeft + plot_w * static_cast<double>(i) / (values.size() - 1);
  };
  const auto y_at = [&](double p) { return kTop + plot_h * (1.0 - p / top_val); };
  const auto f = [](double v) { return text::fixed(v, 2); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << f(kW / 2) << "\" y=\"18\" text-anchor=\"middle\">"
      << text::xml_escape(model) << " hallucination ratio vs " << text::xml_escape(axis) << "</text>\n";
  out << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(kTop + plot_h) << "\" x2=\""
      << f(kLeft + plot_w) << "\" y2=\"" << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(kTop) << "\" x2=\"" << f(kLeft)
      << "\" y2=\"" << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = top_val * k / 5.0;
    out << "<text x=\"" << f(kLeft - 6) << "\" y=\"" << f(y_at(v) + 4)
        << "\" text-anchor=\"end\">" << text::fixed(v, 0) << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i ? " " : "") << f(x_at(i)) << "," << f(y_at(percents[i]));
  }
  out << "\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << "<circle cx=\"" << f(x_at(i)) << "\" cy=\"" << f(y_at(percents[i]))
        << "\" r=\"3\" fill=\"steelblue\" data-value=\"" << text::fixed(percents[i], 4)
        << "\"/>\n";
    out << "<text x=\"" << f(x_at(i)) << "\" y=\"" << f(kTop + plot_h + 16)
        << "\" text-anchor=\"middle\">" << format_axis_value(values[i]) << "</text>\n";
  }
  out << "<text x=\"" << f(kLeft + plot_w / 2) << "\" y=\"" << f(kH - 10)
      << "\" text-anchor=\"middle\">" << text::xml_escape(axis) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

RenderedReport render_report(const json& results, ReportLayout layout) {
  switch (layout) {
    case ReportLayout::table1: return {render_table1(results), {}};
    case ReportLayout::table2: return {render_table2(results), {}};
    case ReportLayout::table3: return {render_table3(results), {}};
    case ReportLayout::sweep: return render_sweep(results);
    case ReportLayout::pope: return {render_pope(results), {}};
  }
  throw ArgumentError("unknown layout");
}

std::vector<std::filesystem::path> emit_report(const json& results, ReportLayout layout,
                                               const std::filesystem::path& path) {
  const RenderedReport r = render_report(results, layout);
  std::vector<std::filesystem::path> files{path};
  text::write_file(path, r.markdown);
  if (!r.svg.empty()) {
    auto svg = path;
    svg.replace_extension(".svg");
    text::write_file(svg, r.svg);
    files.push_back(svg);
  }
  return files;
}

}  // namespace halo
