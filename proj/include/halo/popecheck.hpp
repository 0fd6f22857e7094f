#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/endpoint.hpp"

namespace halo {

/// One absent-item query against one image.
///
/// answered_yes implies asked; caption_hallucinated implies answered_yes
/// (descriptions are only checked for items the model affirmed).
struct ProbeResult {
  ImageId image_id = 0;
  std::string item;
  bool asked = true;
  bool answered_yes = false;
  bool answer_flagged = false;  // neither yes nor no
  bool caption_hallucinated = false;
  std::string raw_answer;
  std::string description;  // empty unless a description was requested

  bool operator==(const ProbeResult&) const = default;
};

void to_json(nlohmann::json& j, const ProbeResult& r);
void from_json(const nlohmann::json& j, ProbeResult& r);

struct ProbeCountsRow {
  std::size_t qh = 0;
  std::size_t ay = 0;
  std::size_t ch = 0;

  bool operator==(const ProbeCountsRow&) const = default;
};

struct ProbeTally {
  std::vector<std::string> items;  // column order
  std::map<std::string, ProbeCountsRow> per_item;
  ProbeCountsRow total;

  double yes_rate() const;           // 100 * ay / qh
  double hallucination_rate() const;  // 100 * ch / ay
};

void to_json(nlohmann::json& j, const ProbeTally& t);
void from_json(const nlohmann::json& j, ProbeTally& t);

/// Items that no reference caption mentions, in input order.
std::vector<std::string> absent_items(const ImageRecord& record,
                                      const std::vector<std::string>& items);

/// "Is there a {item} in this photo?"
std::string probe_prompt(std::string_view item);

struct YesAnswer {
  bool yes = false;
  bool flagged = false;  // answer was neither yes nor no
};

/// Same first-token rule as verdict parsing.
YesAnswer answered_yes(std::string_view raw);

/// Word-boundary, case-insensitive, plural-aware containment.
bool caption_mentions(std::string_view description, std::string_view item);

struct ProbeTarget {
  std::string endpoint_id;
  std::string model_id;
  SamplingConfig sampling{};
};

/// Where run_probe persists results and its resume cursor.
struct ProbeStore {
  std::filesystem::path results;  // probe_results.jsonl
  std::filesystem::path cursor;   // probe_cursor.json

  /// Results persisted so far and the index of the next record to probe.
  std::pair<std::vector<ProbeResult>, std::size_t> load() const;
  void append(std::span<const ProbeResult> results, std::size_t next_record) const;
};

/// Asks each absent item of each record; for records with at least one yes
/// answer, requests one description with describe_prompt and checks it for
/// every affirmed item. Records are processed in chunks; after each chunk
/// results and the cursor are persisted, and a rerun with the same store
/// resumes after the last completed chunk.
std::vector<ProbeResult> run_probe(ChatClient& client, const ProbeTarget& target,
                                   std::span<const ImageRecord> records,
                                   const std::vector<std::string>& items,
                                   std::string_view describe_prompt,
                                   const ProbeStore* store = nullptr, std::size_t chunk = 16);

ProbeTally tally(std::span<const ProbeResult> results, const std::vector<std::string>& items);

}  // namespace halo
