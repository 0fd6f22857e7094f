#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halo/error.hpp"
#include "halo/judge.hpp"
#include "halo/stubs.hpp"
#include "halo/trainer_bridge.hpp"
#include "support.hpp"

using namespace halo;
using halo::testing::record;

namespace {

// One token per line.
class LineTokenizer : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override { return text::split(text, '\n').size(); }
};

SimSample sample(ImageId id, SampleKind kind, std::string text) {
  return SimSample{id, kind, std::move(text), std::string(kFaithfulPromptVersion), "gen"};
}

SimCorpus four_samples() {
  SimCorpus c;
  c.samples = {sample(1, SampleKind::hallucinated, "a cat and a dog"),
               sample(1, SampleKind::faithful, "a cat on a mat"),
               sample(2, SampleKind::hallucinated, "a bus with a giraffe"),
               sample(2, SampleKind::faithful, "a red bus")};
  return c;
}

CaptionStore two_images() {
  return testing::store_of({record(1, {"a cat on a mat"}), record(2, {"a red bus"})});
}

class RecordingBackend : public FinetuneBackend {
 public:
  JudgeHandle train(const std::filesystem::path& path, const FinetuneConfig& config) override {
    seen_path = path;
    seen = config;
    return {"trained-judge", "llama-7b-lora"};
  }
  std::filesystem::path seen_path;
  std::optional<FinetuneConfig> seen;
};

}  // namespace

TEST_CASE("training pairs follow the verdict polarity") {
  const auto r = record(1, {"a cat on a mat"});
  const auto h = make_training_pair(sample(1, SampleKind::hallucinated, "a cat and a dog"), r);
  CHECK(h.answer == "yes");
  CHECK(h.prompt == build_judge_prompt(r, "a cat and a dog").text);
  CHECK(make_training_pair(sample(1, SampleKind::faithful, "a cat"), r).answer == "no");
  CHECK(make_training_pair(sample(1, SampleKind::faithful, "a cat"), r).prompt ==
        testing::golden("judge_prompt_cat.txt"));
  CHECK_THROWS_AS(make_training_pair(sample(2, SampleKind::faithful, "a cat"), r), ArgumentError);
}

TEST_CASE("loss mask examples") {
  CHECK(loss_mask(3, 1).flags == std::vector<bool>{false, false, false, true, true});
  CHECK(loss_mask(1, 1).flags == std::vector<bool>{false, true, true});
  CHECK_THROWS_AS(loss_mask(0, 1), ArgumentError);
  CHECK_THROWS_AS(loss_mask(1, 0), ArgumentError);
}

TEST_CASE("loss mask properties over random lengths") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> len(1, 600);
  for (int i = 0; i < 1000; ++i) {
    const auto p = len(rng), a = len(rng);
    const auto m = loss_mask(p, a);
    REQUIRE(m.flags.size() == p + a + 1);
    CHECK(m.supervised() == a + 1);
    std::size_t first_true = 0;
    while (first_true < m.flags.size() && !m.flags[first_true]) ++first_true;
    CHECK(first_true == p);
  }
}

TEST_CASE("mask and pair agree under a synthetic tokenizer") {
  ApproxTokenizer tok;
  const auto store = two_images();
  for (const auto& s : four_samples().samples) {
    const auto pair = make_training_pair(s, store.at(s.image_id));
    const auto p = tok.count(pair.prompt), a = tok.count(pair.answer);
    CHECK(a == 1);
    const auto m = loss_mask(p, a);
    for (std::size_t i = 0; i < m.flags.size(); ++i) CHECK(m.flags[i] == (i >= p));
  }
}

TEST_CASE("approximate tokenizer") {
  ApproxTokenizer tok;
  CHECK(tok.count("") == 0);
  CHECK(tok.count("a cat") == 2);
  CHECK(tok.count("yes.") == 2);
  CHECK(tok.count("1. a cat, on mats!") == 8);
}

TEST_CASE("export writes one line per pair") {
  testing::TempDir dir;
  const auto res = export_train_set(four_samples(), two_images(), dir / "data/train_pairs.jsonl",
                                    ApproxTokenizer{}, 512);
  CHECK(res.written == 4);
  CHECK(res.dropped == 0);
  const auto lines = text::split(text::read_file(dir / "data/train_pairs.jsonl"), '\n');
  std::size_t yes = 0, no = 0, nonempty = 0;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    ++nonempty;
    const auto j = nlohmann::json::parse(l);
    CHECK(j.size() == 2);
    (j.at("answer") == "yes" ? yes : no)++;
  }
  CHECK(nonempty == 4);
  CHECK(yes == no);
}

TEST_CASE("export drops oversized prompts") {
  auto corpus = four_samples();
  corpus.samples[2].text = "a bus\nwith\na\ngiraffe\nnearby";
  testing::TempDir dir;
  // A one-caption judge prompt spans 7 lines; the multi-line response pushes one past 10.
  const auto res =
      export_train_set(corpus, two_images(), dir / "pairs.jsonl", LineTokenizer{}, 10);
  CHECK(res.written == 3);
  CHECK(res.dropped == 1);
}

TEST_CASE("export is deterministic and checks image ids") {
  testing::TempDir dir;
  export_train_set(four_samples(), two_images(), dir / "a.jsonl", ApproxTokenizer{}, 512);
  export_train_set(four_samples(), two_images(), dir / "b.jsonl", ApproxTokenizer{}, 512);
  CHECK(text::read_file(dir / "a.jsonl") == text::read_file(dir / "b.jsonl"));
  auto corpus = four_samples();
  corpus.samples[0].image_id = 99;
  CHECK_THROWS_AS(export_train_set(corpus, two_images(), dir / "c.jsonl", ApproxTokenizer{}, 512),
                  IntegrityError);
}

TEST_CASE("finetune without a backend is unsupported") {
  testing::TempDir dir;
  text::write_file(dir / "pairs.jsonl", "");
  CHECK_THROWS_AS(finetune(dir / "pairs.jsonl", {}, nullptr), UnsupportedOperationError);
}

TEST_CASE("backend receives the published hyperparameters") {
  testing::TempDir dir;
  text::write_file(dir / "pairs.jsonl", "");
  RecordingBackend backend;
  const auto handle = finetune(dir / "pairs.jsonl", FinetuneConfig{}, &backend);
  REQUIRE(backend.seen);
  const auto& c = *backend.seen;
  CHECK(c.base_model == "LLaMA-7B");
  CHECK(c.batch_size == 64);
  CHECK(c.epochs == 3);
  CHECK(c.learning_rate == 3e-4);
  CHECK(c.max_input_length == 512);
  CHECK(c.adapter_rank == 8);
  CHECK(c.adapter_alpha == 16);
  CHECK(c.adapter_dropout == 0.05);
  CHECK(c.adapter_targets == std::vector<std::string>{"q_proj", "v_proj"});
  CHECK_FALSE(c.train_on_input);
  CHECK(c.half_precision);
  CHECK(c.gradient_accumulation.micro_batch == 8);
  CHECK(c.gradient_accumulation.steps == 8);
  CHECK(backend.seen_path == dir / "pairs.jsonl");

  auto stub = std::make_shared<stubs::FunctionBackend>(
      [](const ChatRequest& r) { return stubs::text_reply(r, "No"); });
  EndpointJudge judge(std::make_shared<ChatClient>(stub, nullptr), handle.endpoint_id,
                      handle.model_id);
  const auto v = judge_response(judge, record(1, {"a cat"}), "a cat");
  CHECK(v.hallucinated == false);
  CHECK(v.judge_id == "trained-judge/llama-7b-lora");
}

TEST_CASE("finetune config validation and JSON") {
  FinetuneConfig c;
  CHECK_NOTHROW(c.validate());
  const nlohmann::json j = c;
  CHECK(j.get<FinetuneConfig>() == c);
  for (const char* k : {"base_model", "batch_size", "epochs", "learning_rate", "max_input_length",
                        "adapter_rank", "adapter_alpha", "adapter_dropout", "adapter_targets",
                        "train_on_input", "half_precision", "gradient_accumulation"})
    CHECK(j.contains(k));

  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(bad.get<FinetuneConfig>(), ConfigError);
  c.train_on_input = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gradient_accumulation.steps = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("command backend exchanges config and handle through files") {
  testing::TempDir dir;
  text::write_file(dir / "pairs.jsonl", "");
  text::write_file(dir / "train.sh",
                   "#!/bin/sh\n"
                   "grep -q '\"epochs\": 3' \"$1\" || exit 3\n"
                   "test -f \"$2\" || exit 4\n"
                   "echo '{\"endpoint_id\":\"local\",\"model_id\":\"judge-v1\"}'\n");
  CommandFinetuneBackend backend("sh " + (dir / "train.sh").string(), dir.path());
  const auto h = finetune(dir / "pairs.jsonl", {}, &backend);
  CHECK(h == JudgeHandle{"local", "judge-v1"});
  CHECK(std::filesystem::exists(dir / "finetune.json"));

  CommandFinetuneBackend failing("false", dir.path());
  CHECK_THROWS_AS(finetune(dir / "pairs.jsonl", {}, &failing), Error);
}
