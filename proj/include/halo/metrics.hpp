#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/judge.hpp"

namespace halo {

/// Cell counts with "positive" meaning hallucinated.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  /// Same matrix with the faithful class as positive.
  ConfusionMatrix swapped() const { return {tn, fn, tp, fp}; }

  bool operator==(const ConfusionMatrix&) const = default;
};

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void from_json(const nlohmann::json& j, ConfusionMatrix& cm);

/// (predicted, truth) pairs, true = hallucinated.
ConfusionMatrix confusion(std::span<const std::pair<bool, bool>> pairs);

/// 100 * (tp + tn) / total. Throws UndefinedMetricError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

enum class PositiveClass { hallucinated, faithful };

/// Percentages in [0, 100]; raw values, round only for display.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give 0 rather than NaN.
ClassMetrics prf1(const ConfusionMatrix& cm, PositiveClass positive = PositiveClass::hallucinated);

/// Half-up rounding (19.375 -> 19.4). A 1e-9 guard absorbs binary
/// representation error in sums of one-decimal values.
double round_half_up(double value, int decimals = 1);

/// |a - b| <= tol, with the same 1e-9 guard.
bool within(double a, double b, double tol);

struct HaluRatio {
  double percent = 0.0;
  std::size_t hallucinated = 0;
  std::size_t parseable = 0;
  std::size_t unparseable = 0;
};

/// Share of parseable verdicts that say hallucinated. Unparseable verdicts
/// are counted but kept out of the denominator. Throws UndefinedMetricError
/// when nothing parsed.
HaluRatio halu_ratio(std::span<const Verdict> verdicts);

/// Hallucination ratios per (model, prompt) with row means (avg_m) and
/// column means (avg_p) on raw values.
struct RatioTable {
  std::vector<std::string> models;
  std::vector<std::string> prompts;
  std::map<std::string, std::map<std::string, double>> cells;  // model -> prompt -> %
  std::map<std::string, double> avg_m;
  std::map<std::string, double> avg_p;

  double cell(const std::string& model, const std::string& prompt) const;
};

/// Throws ShapeError when some model lacks a prompt the others have, or a
/// cell lies outside [0, 100].
RatioTable build_ratio_table(const std::vector<std::string>& models,
                             const std::vector<std::string>& prompts,
                             const std::map<std::string, std::map<std::string, double>>& cells);

/// True iff |2pr/(p+r) - f1_reported| <= tol; p + r = 0 only matches a
/// reported 0.
bool f1_consistent(double p, double r, double f1_reported, double tol);

/// Accuracy on the faithful-only subset, the hallucinated-only subset, and
/// overall. The two subset accuracies are the per-class recalls.
struct SubsetAccuracy {
  double without_hallucination = 0.0;
  double with_hallucination = 0.0;
  double all = 0.0;
};

SubsetAccuracy subset_accuracy(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Consistency checks over published result tables.

struct Prf {
  double p, r, f1;
};

/// Accuracy table: method -> subset ("w/o", "w/", "all") -> model -> %,
/// plus the printed per-subset averages.
struct AccuracyTable {
  std::vector<std::string> methods;
  std::vector<std::string> models;
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> values;
  std::map<std::string, std::map<std::string, double>> averages;  // method -> subset
};

/// P/R/F1 table: method -> class block ("w/o", "w/", "average") -> model.
struct PrfTable {
  std::vector<std::string> methods;
  std::vector<std::string> models;
  std::map<std::string, std::map<std::string, std::map<std::string, Prf>>> values;
};

struct PublishedRatioTable {
  std::vector<std::string> models;
  std::vector<std::string> prompts;
  std::map<std::string, std::map<std::string, double>> cells;
  std::map<std::string, double> avg_m;
  std::map<std::string, double> avg_p;
};

struct Discrepancy {
  std::string where;
  double expected = 0.0;  // recomputed
  double printed = 0.0;
  double tolerance = 0.0;
};

/// Every per-class triplet satisfies f1_consistent.
std::vector<Discrepancy> check_f1_triplets(const PrfTable& t, double tol);
/// Every "average" row equals the mean of its two class rows.
std::vector<Discrepancy> check_average_rows(const PrfTable& t, double tol);
/// Subset accuracies equal the matching class recalls.
std::vector<Discrepancy> check_accuracy_vs_recall(const AccuracyTable& acc, const PrfTable& prf,
                                                  double tol);
/// Printed accuracy averages equal unweighted means over models.
std::vector<Discrepancy> check_accuracy_averages(const AccuracyTable& acc, double tol);
/// Printed Avg-M / Avg-P equal recomputed, half-up rounded means.
std::vector<Discrepancy> check_ratio_averages(const PublishedRatioTable& t, double tol);

}  // namespace halo
