#include "halo/judge.hpp"

#include <fstream>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/simgen.hpp"
#include "halo/templates_embedded.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

}  // namespace

JudgePrompt build_judge_prompt(const ImageRecord& record, std::string_view response) {
  if (response.empty()) throw ArgumentError("judge prompt needs a non-empty response");
  if (record.captions.empty()) {
    throw ArgumentError("image " + std::to_string(record.image_id) + " has no captions");
  }
  std::string body =
      text::substitute(templates::kJudge, "captions", text::numbered_list(record.captions));
  // Substitute the response last so braces inside it are never expanded.
  body = text::substitute(body, "response", response);
  return JudgePrompt{std::move(body), record.image_id, sha256_hex(response),
                     std::string(kJudgeTemplateVersion)};
}

std::optional<std::pair<std::vector<std::string>, std::string>> parse_judge_prompt(
    std::string_view t) {
  const std::string_view tmpl = templates::kJudge;
  const auto cpos = tmpl.find("{captions}");
  const auto rpos = tmpl.find("{response}");
  const std::string_view head = tmpl.substr(0, cpos);
  const std::string_view middle = tmpl.substr(cpos + 10, rpos - cpos - 10);
  const std::string_view tail = tmpl.substr(rpos + 10);
  if (t.size() < head.size() + middle.size() + tail.size()) return std::nullopt;
  if (t.substr(0, head.size()) != head || t.substr(t.size() - tail.size()) != tail) {
    return std::nullopt;
  }
  const std::string_view inner = t.substr(head.size(), t.size() - head.size() - tail.size());
  const auto mid = inner.find(middle);
  if (mid == std::string_view::npos) return std::nullopt;
  std::vector<std::string> captions;
  std::size_t n = 1;
  for (const auto& line : text::split(inner.substr(0, mid), '\n')) {
    const std::string prefix = std::to_string(n++) + ". ";
    if (line.rfind(prefix, 0) != 0) return std::nullopt;
    captions.push_back(line.substr(prefix.size()));
  }
  return std::pair{std::move(captions), std::string(inner.substr(mid + middle.size()))};
}

std::string_view to_string(ParseStatus s) {
  return s == ParseStatus::ok ? "ok" : "unparseable";
}

Verdict parse_verdict(std::string_view raw) {
  Verdict v;
  v.raw = std::string(raw);
  const std::string token = text::first_alpha_token(raw);
  if (token == "yes") {
    v.hallucinated = true;
    v.parse_status = ParseStatus::ok;
  } else if (token == "no") {
    v.hallucinated = false;
    v.parse_status = ParseStatus::ok;
  }
  return v;
}

Verdict oracle_verdict(const ImageRecord& record, std::string_view response,
                       const ObjectVocabulary& vocab) {
  const bool halu = !check_faithful(response, record, vocab).empty();
  Verdict v;
  v.hallucinated = halu;
  v.raw = halu ? "yes" : "no";
  v.parse_status = ParseStatus::ok;
  return v;
}

std::vector<Verdict> Judge::judge_batch(const std::vector<JudgeItem>& items) {
  std::vector<Verdict> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(judge(*it.record, it.response));
  return out;
}

Verdict OracleJudge::judge(const ImageRecord& record, std::string_view response) {
  Verdict v = oracle_verdict(record, response, vocab_);
  v.judge_id = id_;
  return v;
}

EndpointJudge::EndpointJudge(std::shared_ptr<ChatClient> client, std::string endpoint_id,
                             std::string model_id)
    : client_(std::move(client)),
      endpoint_id_(std::move(endpoint_id)),
      model_id_(std::move(model_id)) {
  if (!client_) throw ArgumentError("endpoint judge needs a client");
}

std::string EndpointJudge::id() const { return endpoint_id_ + "/" + model_id_; }

ChatRequest EndpointJudge::make_request(const ImageRecord& record,
                                        std::string_view response) const {
  ChatRequest req;
  req.endpoint_id = endpoint_id_;
  req.model_id = model_id_;
  req.messages = {Message{Role::user, build_judge_prompt(record, response).text}};
  req.sampling.greedy = true;
  req.sampling.temperature = 0.0;
  req.sampling.top_k = 1;
  req.sampling.max_new_tokens = 4;
  return req;
}

Verdict EndpointJudge::judge(const ImageRecord& record, std::string_view response) {
  Verdict v = parse_verdict(client_->send(make_request(record, response)).text);
  v.judge_id = id();
  return v;
}

std::vector<Verdict> EndpointJudge::judge_batch(const std::vector<JudgeItem>& items) {
  std::vector<ChatRequest> reqs;
  reqs.reserve(items.size());
  for (const auto& it : items) reqs.push_back(make_request(*it.record, it.response));
  std::vector<Verdict> out;
  out.reserve(items.size());
  for (const auto& r : client_->send_batch(reqs)) {
    Verdict v = parse_verdict(r.text);
    v.judge_id = id();
    out.push_back(std::move(v));
  }
  return out;
}

Verdict judge_response(Judge& judge, const ImageRecord& record, std::string_view response) {
  return judge.judge(record, response);
}

void to_json(nlohmann::json& j, const VerdictRecord& v) {
  j = json{{"record_id", v.record_id},
           {"response_digest", v.response_digest},
           {"parse_status", to_string(v.verdict.parse_status)},
           {"raw", v.verdict.raw},
           {"judge_id", v.verdict.judge_id}};
  j["hallucinated"] = v.verdict.hallucinated ? json(*v.verdict.hallucinated) : json(nullptr);
}

void from_json(const nlohmann::json& j, VerdictRecord& v) {
  v.record_id = j.at("record_id").get<ImageId>();
  v.response_digest = j.at("response_digest").get<std::string>();
  v.verdict.raw = j.at("raw").get<std::string>();
  v.verdict.judge_id = j.at("judge_id").get<std::string>();
  const auto status = j.at("parse_status").get<std::string>();
  if (status == "ok") {
    v.verdict.parse_status = ParseStatus::ok;
    v.verdict.hallucinated = j.at("hallucinated").get<bool>();
  } else if (status == "unparseable") {
    v.verdict.parse_status = ParseStatus::unparseable;
  } else {
    throw ParseError("unknown parse_status '" + status + "'");
  }
}

void write_verdicts(const std::filesystem::path& path, const std::vector<VerdictRecord>& records) {
  std::string out;
  for (const auto& r : records) out += json(r).dump() + "\n";
  text::write_file(path, out);
}

std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<VerdictRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line).get<VerdictRecord>());
  }
  return out;
}

}  // namespace halo
