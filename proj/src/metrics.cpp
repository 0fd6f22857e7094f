#include "halo/metrics.hpp"

#include <array>
#include <cmath>

#include "halo/error.hpp"

namespace halo {

void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
  j = nlohmann::json{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

void from_json(const nlohmann::json& j, ConfusionMatrix& cm) {
  cm.tp = j.at("tp").get<std::size_t>();
  cm.fp = j.at("fp").get<std::size_t>();
  cm.tn = j.at("tn").get<std::size_t>();
  cm.fn = j.at("fn").get<std::size_t>();
}

ConfusionMatrix confusion(std::span<const std::pair<bool, bool>> pairs) {
  ConfusionMatrix cm;
  for (const auto& [pred, truth] : pairs) {
    if (pred && truth) {
      ++cm.tp;
    } else if (pred) {
      ++cm.fp;
    } else if (truth) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetricError("accuracy of an empty confusion matrix");
  return 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

ClassMetrics prf1(const ConfusionMatrix& matrix, PositiveClass positive) {
  const ConfusionMatrix cm = positive == PositiveClass::hallucinated ? matrix : matrix.swapped();
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  ClassMetrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

bool within(double a, double b, double tol) { return std::fabs(a - b) <= tol + 1e-9; }

HaluRatio halu_ratio(std::span<const Verdict> verdicts) {
  HaluRatio r;
  for (const auto& v : verdicts) {
    if (v.parse_status != ParseStatus::ok) {
      ++r.unparseable;
      continue;
    }
    ++r.parseable;
    if (*v.hallucinated) ++r.hallucinated;
  }
  if (r.parseable == 0) {
    throw UndefinedMetricError("hallucination ratio with no parseable verdicts (" +
                               std::to_string(r.unparseable) + " unparseable)");
  }
  r.percent = 100.0 * static_cast<double>(r.hallucinated) / static_cast<double>(r.parseable);
  return r;
}

double RatioTable::cell(const std::string& model, const std::string& prompt) const {
  return cells.at(model).at(prompt);
}

RatioTable build_ratio_table(const std::vector<std::string>& models,
                             const std::vector<std::string>& prompts,
                             const std::map<std::string, std::map<std::string, double>>& cells) {
  if (models.empty() || prompts.empty()) throw ShapeError("ratio table needs models and prompts");
  std::vector<std::string> missing;
  for (const auto& m : models) {
    auto row = cells.find(m);
    for (const auto& p : prompts) {
      if (row == cells.end() || !row->second.count(p)) {
        missing.push_back(m + "/" + p);
      } else if (row->second.at(p) < 0.0 || row->second.at(p) > 100.0) {
        throw ShapeError("ratio cell " + m + "/" + p + " outside [0, 100]");
      }
    }
    if (row != cells.end() && row->second.size() != prompts.size() && missing.empty()) {
      throw ShapeError("model " + m + " has cells for prompts outside the table");
    }
  }
  if (!missing.empty()) {
    std::string msg = "ragged ratio table, missing cells:";
    for (const auto& c : missing) msg += " " + c;
    throw ShapeError(msg);
  }
  RatioTable t;
  t.models = models;
  t.prompts = prompts;
  for (const auto& m : models) {
    for (const auto& p : prompts) t.cells[m][p] = cells.at(m).at(p);
  }
  for (const auto& m : models) {
    double s = 0.0;
    for (const auto& p : prompts) s += t.cells[m][p];
    t.avg_m[m] = s / static_cast<double>(prompts.size());
  }
  for (const auto& p : prompts) {
    double s = 0.0;
    for (const auto& m : models) s += t.cells[m][p];
    t.avg_p[p] = s / static_cast<double>(models.size());
  }
  return t;
}

bool f1_consistent(double p, double r, double f1_reported, double tol) {
  if (p + r == 0.0) return f1_reported == 0.0;
  return within(2.0 * p * r / (p + r), f1_reported, tol);
}

SubsetAccuracy subset_accuracy(const ConfusionMatrix& cm) {
  return SubsetAccuracy{prf1(cm, PositiveClass::faithful).recall,
                        prf1(cm, PositiveClass::hallucinated).recall, accuracy(cm)};
}

std::vector<Discrepancy> check_f1_triplets(const PrfTable& t, double tol) {
  std::vector<Discrepancy> out;
  for (const auto& method : t.methods) {
    for (const char* block : {"w/o", "w/"}) {
      for (const auto& model : t.models) {
        const Prf& v = t.values.at(method).at(block).at(model);
        if (!f1_consistent(v.p, v.r, v.f1, tol)) {
          const double f1 = v.p + v.r == 0.0 ? 0.0 : 2.0 * v.p * v.r / (v.p + v.r);
          out.push_back({method + " " + block + " " + model + " F1", f1, v.f1, tol});
        }
      }
    }
  }
  return out;
}

std::vector<Discrepancy> check_average_rows(const PrfTable& t, double tol) {
  std::vector<Discrepancy> out;
  for (const auto& method : t.methods) {
    const auto& blocks = t.values.at(method);
    for (const auto& model : t.models) {
      const Prf& a = blocks.at("w/o").at(model);
      const Prf& b = blocks.at("w/").at(model);
      const Prf& avg = blocks.at("average").at(model);
      const std::pair<const char*, std::array<double, 3>> cols[] = {
          {"P", {a.p, b.p, avg.p}}, {"R", {a.r, b.r, avg.r}}, {"F1", {a.f1, b.f1, avg.f1}}};
      for (const auto& [name, v] : cols) {
        const double mean = (v[0] + v[1]) / 2.0;
        if (!within(mean, v[2], tol)) {
          out.push_back({method + " average " + model + " " + name, mean, v[2], tol});
        }
      }
    }
  }
  return out;
}

std::vector<Discrepancy> check_accuracy_vs_recall(const AccuracyTable& acc, const PrfTable& prf,
                                                  double tol) {
  std::vector<Discrepancy> out;
  for (const auto& method : acc.methods) {
    for (const char* block : {"w/o", "w/"}) {
      for (const auto& model : acc.models) {
        const double a = acc.values.at(method).at(block).at(model);
        const double r = prf.values.at(method).at(block).at(model).r;
        if (!within(a, r, tol)) {
          out.push_back({method + " " + block + " " + model + " accuracy vs recall", r, a, tol});
        }
      }
    }
  }
  return out;
}

std::vector<Discrepancy> check_accuracy_averages(const AccuracyTable& acc, double tol) {
  std::vector<Discrepancy> out;
  for (const auto& method : acc.methods) {
    for (const auto& [subset, row] : acc.values.at(method)) {
      double s = 0.0;
      for (const auto& model : acc.models) s += row.at(model);
      const double mean = s / static_cast<double>(acc.models.size());
      const double printed = acc.averages.at(method).at(subset);
      if (!within(mean, printed, tol)) {
        out.push_back({method + " " + subset + " Avg.", mean, printed, tol});
      }
    }
  }
  return out;
}

std::vector<Discrepancy> check_ratio_averages(const PublishedRatioTable& t, double tol) {
  const RatioTable rt = build_ratio_table(t.models, t.prompts, t.cells);
  std::vector<Discrepancy> out;
  for (const auto& m : t.models) {
    const double v = round_half_up(rt.avg_m.at(m));
    if (!within(v, t.avg_m.at(m), tol)) out.push_back({"Avg-M " + m, v, t.avg_m.at(m), tol});
  }
  for (const auto& p : t.prompts) {
    const double v = round_half_up(rt.avg_p.at(p));
    if (!within(v, t.avg_p.at(p), tol)) out.push_back({"Avg-P " + p, v, t.avg_p.at(p), tol});
  }
  return out;
}

}  // namespace halo
