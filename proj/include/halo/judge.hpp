#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/endpoint.hpp"
#include "halo/vocabulary.hpp"

namespace halo {

inline constexpr std::string_view kJudgeTemplateVersion = "judge-v1";

struct JudgePrompt {
  std::string text;
  ImageId record_id = 0;
  std::string response_digest;
  std::string template_version;
};

/// Numbered reference captions, the candidate response, and the fixed
/// yes/no question. Throws ArgumentError on an empty response.
JudgePrompt build_judge_prompt(const ImageRecord& record, std::string_view response);

/// Inverse of build_judge_prompt for stubs and tooling: captions and
/// response, or nullopt when the text is not a judge prompt.
std::optional<std::pair<std::vector<std::string>, std::string>> parse_judge_prompt(
    std::string_view text);

enum class ParseStatus { ok, unparseable };

std::string_view to_string(ParseStatus s);

/// A judge's answer. "yes" means the response contains hallucination.
/// hallucinated is set exactly when parse_status is ok.
struct Verdict {
  std::optional<bool> hallucinated;
  std::string raw;
  ParseStatus parse_status = ParseStatus::unparseable;
  std::string judge_id;

  bool operator==(const Verdict&) const = default;
};

/// Lowercases and skips leading non-letters; the first alphabetic token
/// decides: "yes" -> hallucinated, "no" -> not, anything else unparseable.
Verdict parse_verdict(std::string_view raw);

/// Lexical stand-in for a trained judge: hallucinated iff the response
/// mentions a vocabulary object that no reference caption mentions.
Verdict oracle_verdict(const ImageRecord& record, std::string_view response,
                       const ObjectVocabulary& vocab);

struct JudgeItem {
  const ImageRecord* record;
  std::string_view response;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string id() const = 0;
  virtual Verdict judge(const ImageRecord& record, std::string_view response) = 0;
  /// Verdicts in input order.
  virtual std::vector<Verdict> judge_batch(const std::vector<JudgeItem>& items);
};

class OracleJudge : public Judge {
 public:
  explicit OracleJudge(const ObjectVocabulary& vocab = ObjectVocabulary::coco(),
                       std::string id = "oracle")
      : vocab_(vocab), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  Verdict judge(const ImageRecord& record, std::string_view response) override;

 private:
  const ObjectVocabulary& vocab_;
  std::string id_;
};

/// Judge served by a chat endpoint (trained judge or remote LLM). Requests
/// use greedy decoding with a 4-token budget.
class EndpointJudge : public Judge {
 public:
  EndpointJudge(std::shared_ptr<ChatClient> client, std::string endpoint_id, std::string model_id);
  std::string id() const override;
  Verdict judge(const ImageRecord& record, std::string_view response) override;
  std::vector<Verdict> judge_batch(const std::vector<JudgeItem>& items) override;

  ChatRequest make_request(const ImageRecord& record, std::string_view response) const;

 private:
  std::shared_ptr<ChatClient> client_;
  std::string endpoint_id_;
  std::string model_id_;
};

Verdict judge_response(Judge& judge, const ImageRecord& record, std::string_view response);

/// One line of verdicts.jsonl.
struct VerdictRecord {
  ImageId record_id = 0;
  std::string response_digest;
  Verdict verdict;
};

void to_json(nlohmann::json& j, const VerdictRecord& v);
void from_json(const nlohmann::json& j, VerdictRecord& v);

void write_verdicts(const std::filesystem::path& path, const std::vector<VerdictRecord>& records);
std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path);

}  // namespace halo
