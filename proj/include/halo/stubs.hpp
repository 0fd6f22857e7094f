#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "halo/corpus.hpp"
#include "halo/endpoint.hpp"
#include "halo/vocabulary.hpp"

/// Offline chat backends. They let every pipeline stage run without a
/// network and give tests exact control over endpoint behaviour.
namespace halo::stubs {

/// Counts calls and delegates to a function. Calls are serialized.
class FunctionBackend : public ChatBackend {
 public:
  using Fn = std::function<BackendReply(const ChatRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  BackendReply complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::mutex mu_;
  std::atomic<std::size_t> calls_{0};
};

/// Reply with `text`, counting one token per word.
BackendReply text_reply(const ChatRequest& request, std::string text);

/// Deterministic stand-in for every endpoint role:
///  - judge prompts are answered by the lexical oracle;
///  - generation prompts echo the first caption, and hallucination prompts
///    add an object the captions never mention;
///  - image probes ("Is there a ... in this photo?") are always affirmed;
///  - other image prompts return the image's first caption (needs a store).
class LexicalStub : public ChatBackend {
 public:
  explicit LexicalStub(const CaptionStore* store = nullptr,
                       const ObjectVocabulary& vocab = ObjectVocabulary::coco());
  BackendReply complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  const CaptionStore* store_;
  const ObjectVocabulary& vocab_;
  std::atomic<std::size_t> calls_{0};
};

/// Replays a recorded transcript: JSONL of {image_id, prompt, response}.
/// Unknown (image, prompt) pairs get HTTP 404.
class ReplayBackend : public ChatBackend {
 public:
  using Transcript = std::map<std::pair<ImageId, std::string>, std::string>;
  explicit ReplayBackend(Transcript transcript);
  explicit ReplayBackend(const std::filesystem::path& path);
  static Transcript read(const std::filesystem::path& path);
  BackendReply complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  Transcript transcript_;
  std::atomic<std::size_t> calls_{0};
};

/// LVLM whose hallucination rate is planted. For a rate r over the record
/// list, record i hallucinates iff floor((i+1)r) > floor(ir), so exactly
/// floor(N r) of N records do, spread evenly. A hallucinated response is the
/// first caption plus a sentence naming an object absent from every caption.
class PlantedLvlm : public ChatBackend {
 public:
  using RateFn = std::function<double(const SamplingConfig&)>;
  PlantedLvlm(std::vector<ImageRecord> records, RateFn rate,
              const ObjectVocabulary& vocab = ObjectVocabulary::coco());
  BackendReply complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

  /// Whether record index i hallucinates at rate r.
  static bool planted(std::size_t i, double rate);

 private:
  std::vector<ImageRecord> records_;
  std::map<ImageId, std::size_t> index_;
  RateFn rate_;
  const ObjectVocabulary& vocab_;
  std::atomic<std::size_t> calls_{0};
};

/// A vocabulary object that none of the captions mention.
std::string absent_object(const std::vector<std::string>& captions, const ObjectVocabulary& vocab);

}  // namespace halo::stubs
