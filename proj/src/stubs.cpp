#include "halo/stubs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "halo/error.hpp"
#include "halo/judge.hpp"
#include "halo/simgen.hpp"
#include "halo/text.hpp"

namespace halo::stubs {
namespace {

constexpr std::string_view kProbeHead = "Is there a ";
constexpr std::string_view kProbeTail = " in this photo?";

bool is_probe(std::string_view prompt) {
  return prompt.size() > kProbeHead.size() + kProbeTail.size() &&
         prompt.substr(0, kProbeHead.size()) == kProbeHead &&
         prompt.substr(prompt.size() - kProbeTail.size()) == kProbeTail;
}

BackendReply not_found(std::string why) {
  BackendReply r;
  r.status = 404;
  r.body = std::move(why);
  return r;
}

}  // namespace

BackendReply FunctionBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  return fn_(request);
}

BackendReply text_reply(const ChatRequest& request, std::string text) {
  BackendReply r;
  std::size_t prompt_words = 0;
  for (const auto& m : request.messages) prompt_words += text::words(m.text).size();
  r.prompt_tokens = prompt_words;
  r.completion_tokens = text::words(text).size();
  r.text = std::move(text);
  r.body = r.text;
  return r;
}

std::string absent_object(const std::vector<std::string>& captions,
                          const ObjectVocabulary& vocab) {
  static const char* kCandidates[] = {"giraffe", "zebra", "elephant", "surfboard", "toaster",
                                      "kite"};
  for (const char* c : kCandidates) {
    const bool present = std::any_of(captions.begin(), captions.end(), [&](const std::string& cap) {
      const auto terms = vocab.find_terms(cap);
      return std::find(terms.begin(), terms.end(), c) != terms.end();
    });
    if (!present) return c;
  }
  return "hair drier";
}

LexicalStub::LexicalStub(const CaptionStore* store, const ObjectVocabulary& vocab)
    : store_(store), vocab_(vocab) {}

BackendReply LexicalStub::complete(const ChatRequest& request) {
  ++calls_;
  const std::string& prompt = request.last_user_text();
  if (auto judged = parse_judge_prompt(prompt)) {
    ImageRecord rec;
    rec.captions = judged->first;
    return text_reply(request, oracle_verdict(rec, judged->second, vocab_).raw);
  }
  if (auto gen = parse_generation_prompt(prompt)) {
    const std::string& first = gen->captions.front();
    if (gen->kind == SampleKind::faithful) return text_reply(request, "In this image, " + first);
    return text_reply(request, first + " A " + absent_object(gen->captions, vocab_) +
                                   " can also be seen nearby.");
  }
  if (request.image) {
    if (is_probe(prompt)) return text_reply(request, "Yes.");
    if (!store_ || !store_->contains(request.image->image_id)) {
      return not_found("stub has no captions for image " + std::to_string(request.image->image_id));
    }
    return text_reply(request, store_->at(request.image->image_id).captions.front());
  }
  return text_reply(request, "ok");
}

ReplayBackend::ReplayBackend(Transcript transcript) : transcript_(std::move(transcript)) {}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) : transcript_(read(path)) {}

ReplayBackend::Transcript ReplayBackend::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read transcript " + path.string());
  Transcript t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      t[{j.at("image_id").get<ImageId>(), j.at("prompt").get<std::string>()}] =
          j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return t;
}

BackendReply ReplayBackend::complete(const ChatRequest& request) {
  ++calls_;
  const ImageId id = request.image ? request.image->image_id : -1;
  auto it = transcript_.find({id, request.last_user_text()});
  if (it == transcript_.end()) {
    return not_found("no transcript entry for image " + std::to_string(id));
  }
  return text_reply(request, it->second);
}

PlantedLvlm::PlantedLvlm(std::vector<ImageRecord> records, RateFn rate,
                         const ObjectVocabulary& vocab)
    : records_(std::move(records)), rate_(std::move(rate)), vocab_(vocab) {
  for (std::size_t i = 0; i < records_.size(); ++i) index_[records_[i].image_id] = i;
}

bool PlantedLvlm::planted(std::size_t i, double rate) {
  constexpr double kEps = 1e-9;
  const double a = std::floor(static_cast<double>(i) * rate + kEps);
  const double b = std::floor(static_cast<double>(i + 1) * rate + kEps);
  return b > a;
}

BackendReply PlantedLvlm::complete(const ChatRequest& request) {
  ++calls_;
  if (!request.image) return not_found("planted LVLM needs an image");
  auto it = index_.find(request.image->image_id);
  if (it == index_.end()) return not_found("unknown image");
  const ImageRecord& rec = records_[it->second];
  std::string reply = rec.captions.front();
  if (planted(it->second, rate_(request.sampling))) {
    reply += " A " + absent_object(rec.captions, vocab_) + " is standing in the background.";
  }
  return text_reply(request, reply);
}

}  // namespace halo::stubs
