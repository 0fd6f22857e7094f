#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/simgen.hpp"

namespace halo {

/// Supervised example for the judge. answer is "yes" exactly for
/// hallucinated samples, matching the verdict polarity of the judge.
struct TrainPair {
  std::string prompt;
  std::string answer;

  bool operator==(const TrainPair&) const = default;
};

/// Throws ArgumentError when the sample and record ids differ.
TrainPair make_training_pair(const SimSample& sample, const ImageRecord& record);

/// Loss flags over prompt ++ answer ++ end-of-sequence: false on prompt
/// positions, true on the rest.
struct LossMask {
  std::vector<bool> flags;

  std::size_t supervised() const;
};

/// Throws ArgumentError when either length is zero.
LossMask loss_mask(std::size_t prompt_len, std::size_t answer_len);

/// Token counter used to enforce the input-length limit at export time.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

/// Approximation for when the judge's own tokenizer is unavailable: one
/// token per alphanumeric run and one per punctuation character.
class ApproxTokenizer : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
};

struct ExportResult {
  std::size_t written = 0;
  std::size_t dropped = 0;  // prompts longer than max_input_length
};

/// Writes {prompt, answer} JSONL in corpus order. Over-long prompts are
/// dropped, never truncated. Throws IntegrityError for an image id missing
/// from the store.
ExportResult export_train_set(const SimCorpus& corpus, const CaptionStore& store,
                              const std::filesystem::path& path, const Tokenizer& tokenizer,
                              std::size_t max_input_length);

/// Low-rank adapter fine-tuning settings handed to a training backend.
struct FinetuneConfig {
  std::string base_model = "LLaMA-7B";
  int batch_size = 64;
  int epochs = 3;
  double learning_rate = 3e-4;
  int max_input_length = 512;
  int adapter_rank = 8;
  int adapter_alpha = 16;
  double adapter_dropout = 0.05;
  std::vector<std::string> adapter_targets{"q_proj", "v_proj"};
  bool train_on_input = false;
  bool half_precision = true;
  /// Effective batch = micro_batch x steps.
  struct GradientAccumulation {
    int micro_batch = 8;
    int steps = 8;
    bool operator==(const GradientAccumulation&) const = default;
  } gradient_accumulation;

  /// Throws ConfigError on non-positive numbers, train_on_input, or a
  /// micro-batch product that differs from batch_size.
  void validate() const;

  bool operator==(const FinetuneConfig&) const = default;
};

/// Field names match the struct members; unknown keys are rejected.
void to_json(nlohmann::json& j, const FinetuneConfig& c);
void from_json(const nlohmann::json& j, FinetuneConfig& c);

/// Endpoint coordinates of a trained judge.
struct JudgeHandle {
  std::string endpoint_id;
  std::string model_id;

  bool operator==(const JudgeHandle&) const = default;
};

/// Training backend adapter: loads the base model, applies adapters, runs
/// masked autoregressive training, and reports where the result is served.
class FinetuneBackend {
 public:
  virtual ~FinetuneBackend() = default;
  virtual JudgeHandle train(const std::filesystem::path& train_set,
                            const FinetuneConfig& config) = 0;
};

/// Runs an external command as `<command> <config.json> <train_set>` and
/// reads {"endpoint_id", "model_id"} from its stdout.
class CommandFinetuneBackend : public FinetuneBackend {
 public:
  CommandFinetuneBackend(std::string command, std::filesystem::path work_dir);
  JudgeHandle train(const std::filesystem::path& train_set, const FinetuneConfig& config) override;

 private:
  std::string command_;
  std::filesystem::path work_dir_;
};

/// Throws UnsupportedOperationError when backend is null.
JudgeHandle finetune(const std::filesystem::path& train_set, const FinetuneConfig& config,
                     FinetuneBackend* backend);

}  // namespace halo
