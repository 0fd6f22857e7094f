#include "halo/trainer_bridge.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <memory>
#include <set>

#include <spdlog/spdlog.h>

#include "halo/error.hpp"
#include "halo/judge.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

TrainPair make_training_pair(const SimSample& sample, const ImageRecord& record) {
  if (sample.image_id != record.image_id) {
    throw ArgumentError("sample for image " + std::to_string(sample.image_id) +
                        " paired with record " + std::to_string(record.image_id));
  }
  return TrainPair{build_judge_prompt(record, sample.text).text,
                   sample.kind == SampleKind::hallucinated ? "yes" : "no"};
}

std::size_t LossMask::supervised() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

LossMask loss_mask(std::size_t prompt_len, std::size_t answer_len) {
  if (prompt_len == 0 || answer_len == 0) {
    throw ArgumentError("loss mask needs at least one prompt and one answer token");
  }
  LossMask m;
  m.flags.assign(prompt_len + answer_len + 1, true);
  std::fill_n(m.flags.begin(), prompt_len, false);
  return m;
}

std::size_t ApproxTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (!in_word) ++n;
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(c)) ++n;
    }
  }
  return n;
}

ExportResult export_train_set(const SimCorpus& corpus, const CaptionStore& store,
                              const std::filesystem::path& path, const Tokenizer& tokenizer,
                              std::size_t max_input_length) {
  ExportResult result;
  std::string out;
  for (const auto& sample : corpus.samples) {
    if (!store.contains(sample.image_id)) {
      throw IntegrityError("sim sample references unknown image_id " +
                           std::to_string(sample.image_id));
    }
    TrainPair pair = make_training_pair(sample, store.at(sample.image_id));
    if (tokenizer.count(pair.prompt) > max_input_length) {
      ++result.dropped;
      continue;
    }
    out += json{{"prompt", pair.prompt}, {"answer", pair.answer}}.dump() + "\n";
    ++result.written;
  }
  if (result.dropped) {
    spdlog::warn("export: dropped {} pairs whose prompt exceeds {} tokens", result.dropped,
                 max_input_length);
  }
  text::write_file(path, out);
  return result;
}

void FinetuneConfig::validate() const {
  if (base_model.empty()) throw ConfigError("base_model must be set");
  if (batch_size <= 0 || epochs <= 0 || learning_rate <= 0 || max_input_length <= 0 ||
      adapter_rank <= 0 || adapter_alpha <= 0 || adapter_dropout < 0 ||
      gradient_accumulation.micro_batch <= 0 || gradient_accumulation.steps <= 0) {
    throw ConfigError("finetune config values must be positive");
  }
  if (adapter_targets.empty()) throw ConfigError("adapter_targets must not be empty");
  if (train_on_input) throw ConfigError("train_on_input must stay false");
  if (gradient_accumulation.micro_batch * gradient_accumulation.steps != batch_size) {
    throw ConfigError("micro_batch x steps must equal batch_size");
  }
}

void to_json(nlohmann::json& j, const FinetuneConfig& c) {
  j = json{{"base_model", c.base_model},
           {"batch_size", c.batch_size},
           {"epochs", c.epochs},
           {"learning_rate", c.learning_rate},
           {"max_input_length", c.max_input_length},
           {"adapter_rank", c.adapter_rank},
           {"adapter_alpha", c.adapter_alpha},
           {"adapter_dropout", c.adapter_dropout},
           {"adapter_targets", c.adapter_targets},
           {"train_on_input", c.train_on_input},
           {"half_precision", c.half_precision},
           {"gradient_accumulation",
            {{"micro_batch", c.gradient_accumulation.micro_batch},
             {"steps", c.gradient_accumulation.steps}}}};
}

void from_json(const nlohmann::json& j, FinetuneConfig& c) {
  static const std::set<std::string> known = {
      "base_model",     "batch_size",      "epochs",          "learning_rate",
      "max_input_length", "adapter_rank",  "adapter_alpha",   "adapter_dropout",
      "adapter_targets", "train_on_input", "half_precision",  "gradient_accumulation"};
  if (!j.is_object()) throw ConfigError("finetune config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown finetune config key '" + k + "'");
  }
  c = FinetuneConfig{};
  try {
    c.base_model = j.value("base_model", c.base_model);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_input_length = j.value("max_input_length", c.max_input_length);
    c.adapter_rank = j.value("adapter_rank", c.adapter_rank);
    c.adapter_alpha = j.value("adapter_alpha", c.adapter_alpha);
    c.adapter_dropout = j.value("adapter_dropout", c.adapter_dropout);
    c.adapter_targets = j.value("adapter_targets", c.adapter_targets);
    c.train_on_input = j.value("train_on_input", c.train_on_input);
    c.half_precision = j.value("half_precision", c.half_precision);
    if (j.contains("gradient_accumulation")) {
      const auto& g = j.at("gradient_accumulation");
      c.gradient_accumulation.micro_batch = g.value("micro_batch", 8);
      c.gradient_accumulation.steps = g.value("steps", 8);
    }
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("finetune config: ") + e.what());
  }
}

CommandFinetuneBackend::CommandFinetuneBackend(std::string command,
                                               std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

JudgeHandle CommandFinetuneBackend::train(const std::filesystem::path& train_set,
                                          const FinetuneConfig& config) {
  const auto config_path = work_dir_ / "finetune.json";
  text::write_file(config_path, json(config).dump(2) + "\n");
  const std::string cmd =
      command_ + " " + shell_quote(config_path.string()) + " " + shell_quote(train_set.string());
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw IoError("cannot start training backend: " + command_);
  std::string output;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe.get())) output += buf.data();
  const int status = pclose(pipe.release());
  if (status != 0) {
    throw Error("training backend exited with status " + std::to_string(status));
  }
  try {
    const json j = json::parse(output);
    return JudgeHandle{j.at("endpoint_id").get<std::string>(), j.at("model_id").get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(std::string("training backend output: ") + e.what());
  }
}

JudgeHandle finetune(const std::filesystem::path& train_set, const FinetuneConfig& config,
                     FinetuneBackend* backend) {
  if (!backend) {
    throw UnsupportedOperationError(
        "no training backend configured; run export-train and fine-tune the exported pairs "
        "externally, then register the resulting endpoint as a judge");
  }
  config.validate();
  if (!std::filesystem::exists(train_set)) throw IoError("no such file: " + train_set.string());
  return backend->train(train_set, config);
}

}  // namespace halo
