#include "halo/reference_tables.hpp"

namespace halo::reference {

const AccuracyTable& judge_accuracy() {
  static const AccuracyTable t = [] {
    AccuracyTable a;
    a.methods = kMethods;
    a.models = kModels;
    a.values["GPT-3.5"]["w/o"] = {{"LLaVA", 82.0}, {"MiniGPT-4", 38.9}, {"mPLUG-Owl", 50.8}};
    a.values["GPT-3.5"]["w/"] = {{"LLaVA", 48.7}, {"MiniGPT-4", 78.1}, {"mPLUG-Owl", 72.9}};
    a.values["GPT-3.5"]["all"] = {{"LLaVA", 69.0}, {"MiniGPT-4", 64.0}, {"mPLUG-Owl", 59.0}};
    a.values["HaELM"]["w/o"] = {{"LLaVA", 93.4}, {"MiniGPT-4", 61.1}, {"mPLUG-Owl", 60.1}};
    a.values["HaELM"]["w/"] = {{"LLaVA", 25.6}, {"MiniGPT-4", 57.8}, {"mPLUG-Owl", 43.2}};
    a.values["HaELM"]["all"] = {{"LLaVA", 67.0}, {"MiniGPT-4", 59.0}, {"mPLUG-Owl", 57.0}};
    a.averages["GPT-3.5"] = {{"w/o", 57.2}, {"w/", 66.6}, {"all", 64.0}};
    a.averages["HaELM"] = {{"w/o", 71.5}, {"w/", 42.2}, {"all", 61.0}};
    return a;
  }();
  return t;
}

const PrfTable& judge_prf() {
  static const PrfTable t = [] {
    PrfTable p;
    p.methods = kMethods;
    p.models = kModels;
    auto& g = p.values["GPT-3.5"];
    g["w/o"] = {{"LLaVA", {71.4, 82.0, 76.3}},
                {"MiniGPT-4", {50.0, 38.9, 43.8}},
                {"mPLUG-Owl", {76.2, 50.8, 61.0}}};
    g["w/"] = {{"LLaVA", {63.3, 48.7, 55.0}},
               {"MiniGPT-4", {69.4, 78.1, 73.5}},
               {"mPLUG-Owl", {46.6, 73.0, 56.8}}};
    g["average"] = {{"LLaVA", {67.4, 65.4, 65.6}},
                    {"MiniGPT-4", {59.7, 58.5, 58.7}},
                    {"mPLUG-Owl", {61.4, 61.9, 58.9}}};
    auto& h = p.values["HaELM"];
    h["w/o"] = {{"LLaVA", {66.3, 93.4, 77.5}},
                {"MiniGPT-4", {44.9, 61.1, 51.8}},
                {"mPLUG-Owl", {66.1, 65.1, 65.6}}};
    h["w/"] = {{"LLaVA", {71.4, 25.6, 37.7}},
               {"MiniGPT-4", {72.5, 57.8, 64.3}},
               {"mPLUG-Owl", {42.1, 43.2, 42.7}}};
    h["average"] = {{"LLaVA", {68.9, 59.5, 57.6}},
                    {"MiniGPT-4", {58.7, 59.5, 58.1}},
                    {"mPLUG-Owl", {54.1, 54.2, 51.7}}};
    return p;
  }();
  return t;
}

const PublishedRatioTable& prompt_ratios() {
  static const PublishedRatioTable t = [] {
    PublishedRatioTable r;
    r.models = kModels;
    r.prompts = {"P1", "P2", "P3", "P4"};
    r.cells["LLaVA"] = {{"P1", 20.0}, {"P2", 19.4}, {"P3", 18.6}, {"P4", 19.5}};
    r.cells["MiniGPT-4"] = {{"P1", 46.1}, {"P2", 35.5}, {"P3", 69.7}, {"P4", 68.8}};
    r.cells["mPLUG-Owl"] = {{"P1", 35.9}, {"P2", 24.1}, {"P3", 47.2}, {"P4", 37.6}};
    r.avg_m = {{"LLaVA", 19.4}, {"MiniGPT-4", 55.0}, {"mPLUG-Owl", 36.2}};
    r.avg_p = {{"P1", 34.0}, {"P2", 26.3}, {"P3", 45.2}, {"P4", 42.0}};
    return r;
  }();
  return t;
}

const AxisReference& length_sweep() {
  static const AxisReference r{"max_length", {128, 256, 512, 1024}, {33.1, 35.7, 35.9, 37.0}};
  return r;
}

const AxisReference& topk_sweep() {
  static const AxisReference r{"top_k", {1, 2, 3, 4, 5}, {24.7, 33.0, 35.9, 40.3, 42.4}};
  return r;
}

const AxisReference& temperature_sweep() {
  static const AxisReference r{
      "temperature", {0.2, 0.4, 0.6, 0.8, 1.0}, {24.7, 26.6, 31.1, 33.0, 35.9}};
  return r;
}

const std::vector<ProbeCounts>& probe_counts() {
  static const std::vector<ProbeCounts> t = {
      {"mPLUG-Owl",
       kProbeItems,
       {48, 87, 89, 94, 96, 89, 97, 98, 96, 96},
       {45, 45, 84, 92, 96, 89, 91, 82, 9, 84},
       {14, 3, 23, 17, 4, 10, 10, 1, 0, 0},
       890,
       717,
       82},
      {"MiniGPT-4",
       kProbeItems,
       {48, 87, 89, 94, 96, 89, 97, 98, 96, 96},
       {22, 49, 51, 58, 49, 44, 47, 45, 21, 46},
       {6, 7, 13, 10, 2, 0, 3, 3, 0, 1},
       890,
       432,
       46},
      {"LLaVA",
       kProbeItems,
       {48, 87, 89, 94, 96, 89, 97, 98, 96, 96},
       {42, 49, 83, 91, 95, 82, 94, 92, 38, 87},
       {8, 2, 16, 9, 2, 4, 8, 0, 0, 0},
       890,
       753,
       49},
  };
  return t;
}

}  // namespace halo::reference
