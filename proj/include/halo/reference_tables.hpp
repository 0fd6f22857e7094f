#pragma once

#include <map>
#include <string>
#include <vector>

#include "halo/metrics.hpp"

/// Published judge and LVLM hallucination result tables, transcribed verbatim.
/// Used by consistency checks, report-layout tests and probe fixtures.
namespace halo::reference {

inline const std::vector<std::string> kModels = {"LLaVA", "MiniGPT-4", "mPLUG-Owl"};
inline const std::vector<std::string> kMethods = {"GPT-3.5", "HaELM"};

/// Judge accuracy on human-annotated responses.
const AccuracyTable& judge_accuracy();

/// Judge precision / recall / F1 per class.
const PrfTable& judge_prf();

/// Hallucination ratios of three LVLMs under prompts P1-P4.
const PublishedRatioTable& prompt_ratios();

struct AxisReference {
  std::string axis;
  std::vector<double> values;
  std::vector<double> ratios;
};

/// mPLUG-Owl hallucination ratio along max length, top-K and temperature.
const AxisReference& length_sweep();
const AxisReference& topk_sweep();
const AxisReference& temperature_sweep();

/// Absent-item probe counts over 100 images for one LVLM.
struct ProbeCounts {
  std::string model;
  std::vector<std::string> items;
  std::vector<int> qh;
  std::vector<int> ay;
  std::vector<int> ch;
  int qh_sum = 0;  // as printed in the sum column
  int ay_sum = 0;
  int ch_sum = 0;
};

const std::vector<ProbeCounts>& probe_counts();

/// Default absent-item list (ten most frequently hallucinated objects).
inline const std::vector<std::string> kProbeItems = {"person", "table", "chair", "car",
                                                     "book",   "bottle", "cup",  "cat",
                                                     "horse",  "toilet"};

}  // namespace halo::reference
