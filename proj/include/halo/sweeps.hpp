#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/endpoint.hpp"
#include "halo/judge.hpp"
#include "halo/metrics.hpp"

namespace halo {

/// P1..P4 generation prompts, in order.
const std::vector<std::pair<std::string, std::string>>& generation_prompts();

/// Text of a generation prompt id. Throws ArgumentError for unknown ids.
const std::string& generation_prompt(std::string_view id);

/// Sampling used when an axis is not being swept.
SamplingConfig default_generation_sampling();

struct LvlmTarget {
  std::string endpoint_id;
  std::string model_id;
};

struct GenerationRun {
  std::string lvlm_id;
  std::string prompt_id;
  std::string prompt_text;
  SamplingConfig sampling;
  std::vector<std::pair<ImageId, std::string>> responses;  // record order
  std::string judge_id;
};

/// responses.jsonl shared by every generation cell of one run. Each line is
/// tagged with its cell so an interrupted run can pick up where it stopped.
class ResponseLog {
 public:
  explicit ResponseLog(std::filesystem::path path) : path_(std::move(path)) {}

  std::vector<std::pair<ImageId, std::string>> load(std::string_view cell) const;
  void append(std::string_view cell, const GenerationRun& run,
              std::span<const std::pair<ImageId, std::string>> responses) const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// One LVLM call per record with the prompt and sampling config; with a log,
/// already persisted responses for `cell` are reused and new ones appended
/// in chunks.
GenerationRun run_generation(ChatClient& client, const LvlmTarget& target,
                             std::span<const ImageRecord> records, std::string prompt_id,
                             std::string prompt_text, const SamplingConfig& sampling,
                             const ResponseLog* log = nullptr, std::string_view cell = "",
                             std::size_t chunk = 64);

struct EvalOutcome {
  HaluRatio ratio;
  std::vector<VerdictRecord> verdicts;
};

/// Judges every response of the run against its image's captions.
EvalOutcome evaluate_run(GenerationRun& run, Judge& judge, const CaptionStore& store);

enum class Axis { max_length, top_k, temperature };

std::string_view to_string(Axis a);
Axis parse_axis(std::string_view s);

/// `fixed` with the axis field replaced by value.
SamplingConfig apply_axis(SamplingConfig fixed, Axis axis, double value);

struct SweepPoint {
  double value = 0.0;
  SamplingConfig sampling;
  HaluRatio ratio;
  std::vector<VerdictRecord> verdicts;
};

/// One generation + evaluation per axis value, executed sequentially, in the
/// order given.
std::vector<SweepPoint> sweep_axis(Axis axis, const std::vector<double>& values,
                                   const SamplingConfig& fixed, ChatClient& client,
                                   const LvlmTarget& target, std::span<const ImageRecord> records,
                                   Judge& judge, const CaptionStore& store,
                                   std::string_view prompt_text = "Describe this image.",
                                   const ResponseLog* log = nullptr);

/// Deterministic record of a run.
struct RunManifest {
  std::string run_id;
  std::string command;
  nlohmann::json config;
  std::string config_digest;
  std::string corpus_digest;
  std::uint64_t seed = 0;
  std::vector<std::string> request_digests;
  std::map<std::string, std::string> artifacts;  // relative path -> sha256

  bool operator==(const RunManifest&) const = default;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

/// SHA-256 of the compact, key-sorted JSON form.
std::string config_digest(const nlohmann::json& config);

/// "<12 hex of config digest>-<UTC timestamp>".
std::string make_run_id(const nlohmann::json& config);

/// Digests every named artifact under run_dir. Throws IntegrityError when
/// one is missing.
RunManifest build_manifest(std::string run_id, std::string command, nlohmann::json config,
                           std::string corpus_digest, std::uint64_t seed,
                           std::vector<std::string> request_digests,
                           const std::filesystem::path& run_dir,
                           const std::vector<std::string>& artifact_names);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace halo
