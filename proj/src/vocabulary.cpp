#include "halo/vocabulary.hpp"

#include <algorithm>
#include <set>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo {

ObjectVocabulary::ObjectVocabulary(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  if (entries.empty()) throw ArgumentError("object vocabulary must not be empty");
  for (const auto& [singular, plural] : entries) {
    Term t;
    t.name = text::to_lower(singular);
    t.forms.push_back(text::words(singular));
    auto p = text::words(plural);
    if (p != t.forms.front()) t.forms.push_back(std::move(p));
    for (const auto& f : t.forms) max_len_ = std::max(max_len_, f.size());
    terms_.push_back(std::move(t));
  }
}

ObjectVocabulary ObjectVocabulary::from_terms(const std::vector<std::string>& terms) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& term : terms) {
    auto forms = text::surface_forms(term);
    if (forms.empty()) throw ArgumentError("empty vocabulary term");
    std::string plural;
    for (const auto& w : forms.back()) plural += (plural.empty() ? "" : " ") + w;
    entries.emplace_back(term, plural);
  }
  return ObjectVocabulary(entries);
}

const ObjectVocabulary& ObjectVocabulary::coco() {
  static const ObjectVocabulary vocab({
      {"person", "people"},         {"bicycle", "bicycles"},
      {"car", "cars"},              {"motorcycle", "motorcycles"},
      {"airplane", "airplanes"},    {"bus", "buses"},
      {"train", "trains"},          {"truck", "trucks"},
      {"boat", "boats"},            {"traffic light", "traffic lights"},
      {"fire hydrant", "fire hydrants"}, {"stop sign", "stop signs"},
      {"parking meter", "parking meters"}, {"bench", "benches"},
      {"bird", "birds"},            {"cat", "cats"},
      {"dog", "dogs"},              {"horse", "horses"},
      {"sheep", "sheep"},           {"cow", "cows"},
      {"elephant", "elephants"},    {"bear", "bears"},
      {"zebra", "zebras"},          {"giraffe", "giraffes"},
      {"backpack", "backpacks"},    {"umbrella", "umbrellas"},
      {"handbag", "handbags"},      {"tie", "ties"},
      {"suitcase", "suitcases"},    {"frisbee", "frisbees"},
      {"skis", "ski"},              {"snowboard", "snowboards"},
      {"sports ball", "sports balls"}, {"kite", "kites"},
      {"baseball bat", "baseball bats"}, {"baseball glove", "baseball gloves"},
      {"skateboard", "skateboards"}, {"surfboard", "surfboards"},
      {"tennis racket", "tennis rackets"}, {"bottle", "bottles"},
      {"wine glass", "wine glasses"}, {"cup", "cups"},
      {"fork", "forks"},            {"knife", "knives"},
      {"spoon", "spoons"},          {"bowl", "bowls"},
      {"banana", "bananas"},        {"apple", "apples"},
      {"sandwich", "sandwiches"},   {"orange", "oranges"},
      {"broccoli", "broccoli"},     {"carrot", "carrots"},
      {"hot dog", "hot dogs"},      {"pizza", "pizzas"},
      {"donut", "donuts"},          {"cake", "cakes"},
      {"chair", "chairs"},          {"couch", "couches"},
      {"potted plant", "potted plants"}, {"bed", "beds"},
      {"dining table", "dining tables"}, {"toilet", "toilets"},
      {"tv", "tvs"},                {"laptop", "laptops"},
      {"mouse", "mice"},            {"remote", "remotes"},
      {"keyboard", "keyboards"},    {"cell phone", "cell phones"},
      {"microwave", "microwaves"},  {"oven", "ovens"},
      {"toaster", "toasters"},      {"sink", "sinks"},
      {"refrigerator", "refrigerators"}, {"book", "books"},
      {"clock", "clocks"},          {"vase", "vases"},
      {"scissors", "scissors"},     {"teddy bear", "teddy bears"},
      {"hair drier", "hair driers"}, {"toothbrush", "toothbrushes"},
  });
  return vocab;
}

std::vector<std::string> ObjectVocabulary::find_terms(std::string_view text) const {
  const auto tokens = text::words(text);
  std::vector<std::string> found;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Term* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& term : terms_) {
      for (const auto& form : term.forms) {
        if (form.size() <= best_len || i + form.size() > tokens.size()) continue;
        if (std::equal(form.begin(), form.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
          best = &term;
          best_len = form.size();
        }
      }
    }
    if (best) {
      if (seen.insert(best->name).second) found.push_back(best->name);
      i += best_len;
    } else {
      ++i;
    }
  }
  return found;
}

}  // namespace halo
