#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/endpoint.hpp"
#include "halo/vocabulary.hpp"

namespace halo {

enum class SampleKind { hallucinated, faithful };

std::string_view to_string(SampleKind k);
SampleKind parse_sample_kind(std::string_view s);

inline constexpr std::string_view kHaluPromptVersion = "halu-v1";
inline constexpr std::string_view kFaithfulPromptVersion = "faithful-v1";

struct SimSample {
  ImageId image_id = 0;
  SampleKind kind = SampleKind::faithful;
  std::string text;
  std::string prompt_version;
  std::string source_model;

  bool operator==(const SimSample&) const = default;
};

void to_json(nlohmann::json& j, const SimSample& s);
void from_json(const nlohmann::json& j, SimSample& s);

struct SimCorpus {
  std::vector<SimSample> samples;

  std::size_t count(SampleKind kind) const;
  void save(const std::filesystem::path& path) const;
  static SimCorpus load(const std::filesystem::path& path);
};

/// Prompt asking the generator for a detailed description that also slips
/// in content absent from the reference captions.
std::vector<Message> build_halu_prompt(const ImageRecord& record);

/// Prompt asking for a detailed description restricted to the objects in
/// the reference captions.
std::vector<Message> build_faithful_prompt(const ImageRecord& record);

/// Recognises a rendered generation prompt and recovers its captions.
struct ParsedGenerationPrompt {
  SampleKind kind;
  std::vector<std::string> captions;
};
std::optional<ParsedGenerationPrompt> parse_generation_prompt(std::string_view text);

/// Vocabulary terms mentioned in `text` but in none of the record's
/// captions, in order of first occurrence. Empty means accepted.
std::vector<std::string> check_faithful(std::string_view text, const ImageRecord& record,
                                        const ObjectVocabulary& vocab);

struct CollectOptions {
  std::size_t n_each = 10000;
  std::uint64_t seed = 0;
  int max_faithful_attempts = 3;
  std::string endpoint_id;
  std::string model_id;
  SamplingConfig sampling{};
  std::optional<std::filesystem::path> output;  // JSONL, written on success
};

/// Draws records in seeded order and requests one sample per (record, kind)
/// until n_each of each kind are accepted.
///
/// Both kinds walk the same draw, so an image may contribute one sample of
/// each kind. Faithful samples failing check_faithful are regenerated up to
/// max_faithful_attempts times, then the record is skipped. Throws
/// CollectionIncompleteError when the records run out first, and
/// ArgumentError when any record is outside the train split.
SimCorpus collect_sim_corpus(std::span<const ImageRecord> records, ChatClient& client,
                             const CollectOptions& options, const ObjectVocabulary& vocab);

}  // namespace halo
