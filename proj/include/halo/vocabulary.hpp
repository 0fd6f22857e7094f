#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace halo {

/// Closed set of object nouns used by the lexical faithfulness check, the
/// oracle judge, and probe item matching.
///
/// Each term carries its singular and plural surface forms. Matching is
/// case-insensitive and word-boundary based, and scans left to right taking
/// the longest surface form at each position, so "teddy bear" is not also
/// reported as "bear".
class ObjectVocabulary {
 public:
  struct Term {
    std::string name;
    std::vector<std::vector<std::string>> forms;  // word sequences
  };

  /// Terms given as (singular, plural) pairs.
  explicit ObjectVocabulary(const std::vector<std::pair<std::string, std::string>>& entries);

  /// Terms whose plurals follow text::pluralize.
  static ObjectVocabulary from_terms(const std::vector<std::string>& terms);

  /// The 80 COCO object categories.
  static const ObjectVocabulary& coco();

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// Distinct term names occurring in `text`, in order of first occurrence.
  std::vector<std::string> find_terms(std::string_view text) const;

 private:
  std::vector<Term> terms_;
  std::size_t max_len_ = 0;
};

}  // namespace halo
