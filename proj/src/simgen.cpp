#include "halo/simgen.hpp"

#include <algorithm>
#include <fstream>

#include <spdlog/spdlog.h>

#include "halo/error.hpp"
#include "halo/templates_embedded.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

std::vector<Message> render(std::string_view tmpl, const ImageRecord& record) {
  if (record.captions.empty()) {
    throw ArgumentError("image " + std::to_string(record.image_id) + " has no captions");
  }
  return {Message{Role::user,
                  text::substitute(tmpl, "captions", text::numbered_list(record.captions))}};
}

// Splits a template around its {captions} slot.
std::pair<std::string_view, std::string_view> around_captions(std::string_view tmpl) {
  const auto pos = tmpl.find("{captions}");
  return {tmpl.substr(0, pos), tmpl.substr(pos + std::string_view("{captions}").size())};
}

std::vector<std::string> parse_numbered(std::string_view block) {
  std::vector<std::string> out;
  std::size_t n = 1;
  for (const auto& line : text::split(block, '\n')) {
    const std::string prefix = std::to_string(n) + ". ";
    if (line.rfind(prefix, 0) != 0) return {};
    out.push_back(line.substr(prefix.size()));
    ++n;
  }
  return out;
}

}  // namespace

std::string_view to_string(SampleKind k) {
  return k == SampleKind::hallucinated ? "hallucinated" : "faithful";
}

SampleKind parse_sample_kind(std::string_view s) {
  if (s == "hallucinated") return SampleKind::hallucinated;
  if (s == "faithful") return SampleKind::faithful;
  throw ParseError("unknown sample kind '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const SimSample& s) {
  j = json{{"image_id", s.image_id},
           {"kind", to_string(s.kind)},
           {"text", s.text},
           {"prompt_version", s.prompt_version},
           {"source_model", s.source_model}};
}

void from_json(const nlohmann::json& j, SimSample& s) {
  s.image_id = j.at("image_id").get<ImageId>();
  s.kind = parse_sample_kind(j.at("kind").get<std::string>());
  s.text = j.at("text").get<std::string>();
  s.prompt_version = j.value("prompt_version", std::string{});
  s.source_model = j.value("source_model", std::string{});
  if (s.text.empty()) throw ParseError("sim sample with empty text");
}

std::size_t SimCorpus::count(SampleKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [kind](const SimSample& s) { return s.kind == kind; }));
}

void SimCorpus::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& s : samples) out += json(s).dump() + "\n";
  text::write_file(path, out);
}

SimCorpus SimCorpus::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  SimCorpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      c.samples.push_back(json::parse(line).get<SimSample>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return c;
}

std::vector<Message> build_halu_prompt(const ImageRecord& record) {
  return render(templates::kHalu, record);
}

std::vector<Message> build_faithful_prompt(const ImageRecord& record) {
  return render(templates::kFaithful, record);
}

std::optional<ParsedGenerationPrompt> parse_generation_prompt(std::string_view text) {
  for (auto [kind, tmpl] : {std::pair{SampleKind::hallucinated, templates::kHalu},
                            std::pair{SampleKind::faithful, templates::kFaithful}}) {
    const auto [head, tail] = around_captions(tmpl);
    if (text.size() < head.size() + tail.size()) continue;
    if (text.substr(0, head.size()) != head) continue;
    if (text.substr(text.size() - tail.size()) != tail) continue;
    auto caps = parse_numbered(text.substr(head.size(), text.size() - head.size() - tail.size()));
    if (caps.empty()) continue;
    return ParsedGenerationPrompt{kind, std::move(caps)};
  }
  return std::nullopt;
}

std::vector<std::string> check_faithful(std::string_view text, const ImageRecord& record,
                                        const ObjectVocabulary& vocab) {
  std::vector<std::string> in_captions;
  for (const auto& c : record.captions) {
    for (auto& t : vocab.find_terms(c)) in_captions.push_back(std::move(t));
  }
  std::vector<std::string> violations;
  for (auto& t : vocab.find_terms(text)) {
    if (std::find(in_captions.begin(), in_captions.end(), t) == in_captions.end()) {
      violations.push_back(std::move(t));
    }
  }
  return violations;
}

SimCorpus collect_sim_corpus(std::span<const ImageRecord> records, ChatClient& client,
                             const CollectOptions& options, const ObjectVocabulary& vocab) {
  for (const auto& r : records) {
    if (r.split && *r.split != Split::train) {
      throw ArgumentError("sim corpus records must come from the train split (image " +
                          std::to_string(r.image_id) + " is " +
                          std::string(to_string(*r.split)) + ")");
    }
  }
  const auto order = sample_records(records, records.size(), options.seed);

  auto make_request = [&](const ImageRecord& r, SampleKind kind, int attempt) {
    ChatRequest req;
    req.endpoint_id = options.endpoint_id;
    req.model_id = options.model_id;
    req.messages = kind == SampleKind::hallucinated ? build_halu_prompt(r) : build_faithful_prompt(r);
    req.sampling = options.sampling;
    req.seed = static_cast<std::int64_t>(options.seed) + attempt;
    return req;
  };

  struct Slot {
    std::size_t index;  // position in the draw
    int attempts = 0;
  };

  auto collect_kind = [&](SampleKind kind) {
    std::vector<SimSample> accepted;
    std::size_t cursor = 0;
    std::vector<Slot> retry;
    const int max_attempts = kind == SampleKind::faithful ? options.max_faithful_attempts : 1;
    const std::string version(kind == SampleKind::hallucinated ? kHaluPromptVersion
                                                               : kFaithfulPromptVersion);
    while (accepted.size() < options.n_each) {
      // Pending retries go first, then fresh records, enough to fill the gap.
      std::vector<Slot> round;
      const std::size_t need = options.n_each - accepted.size();
      while (round.size() < need && !retry.empty()) {
        round.push_back(retry.front());
        retry.erase(retry.begin());
      }
      while (round.size() < need && cursor < order.size()) round.push_back(Slot{cursor++, 0});
      if (round.empty()) break;

      std::vector<ChatRequest> reqs;
      reqs.reserve(round.size());
      for (const auto& s : round) reqs.push_back(make_request(order[s.index], kind, s.attempts));
      auto outcomes = client.try_send_batch(reqs);

      for (std::size_t i = 0; i < round.size(); ++i) {
        Slot s = round[i];
        ++s.attempts;
        const ImageRecord& rec = order[s.index];
        bool ok = false;
        if (outcomes[i].error) {
          try {
            std::rethrow_exception(outcomes[i].error);
          } catch (const EmptyResponseError&) {
            spdlog::debug("image {}: empty {} completion", rec.image_id, to_string(kind));
          }
        } else {
          const std::string& out = outcomes[i].response->text;
          if (kind == SampleKind::hallucinated) {
            ok = true;
          } else {
            const auto violations = check_faithful(out, rec, vocab);
            ok = violations.empty();
            if (!ok) spdlog::debug("image {}: faithful sample rejected ({} off-caption objects)",
                                   rec.image_id, violations.size());
          }
          if (ok && accepted.size() < options.n_each) {
            accepted.push_back(SimSample{rec.image_id, kind, out, version, options.model_id});
          }
        }
        if (!ok) {
          if (s.attempts < max_attempts) {
            retry.push_back(s);
          } else {
            spdlog::info("image {}: skipped after {} {} attempts", rec.image_id, s.attempts,
                         to_string(kind));
          }
        }
      }
    }
    return accepted;
  };

  SimCorpus corpus;
  auto halu = collect_kind(SampleKind::hallucinated);
  auto faithful = collect_kind(SampleKind::faithful);
  if (halu.size() < options.n_each || faithful.size() < options.n_each) {
    throw CollectionIncompleteError(halu.size(), faithful.size(), options.n_each);
  }
  corpus.samples = std::move(halu);
  corpus.samples.insert(corpus.samples.end(), faithful.begin(), faithful.end());
  if (options.output) corpus.save(*options.output);
  return corpus;
}

}  // namespace halo
