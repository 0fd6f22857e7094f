#include "halo/sweeps.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/templates_embedded.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

}  // namespace

const std::vector<std::pair<std::string, std::string>>& generation_prompts() {
  static const auto prompts = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& line : text::split(templates::kGenerationPrompts, '\n')) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
  }();
  return prompts;
}

const std::string& generation_prompt(std::string_view id) {
  for (const auto& [pid, textv] : generation_prompts()) {
    if (pid == id) return textv;
  }
  throw ArgumentError("unknown generation prompt id '" + std::string(id) + "'");
}

SamplingConfig default_generation_sampling() {
  SamplingConfig s;
  s.temperature = 1.0;
  s.top_k = 3;
  s.max_new_tokens = 512;
  s.greedy = false;
  return s;
}

std::vector<std::pair<ImageId, std::string>> ResponseLog::load(std::string_view cell) const {
  std::vector<std::pair<ImageId, std::string>> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      continue;  // torn tail of an interrupted append
    }
    if (j.value("cell", std::string{}) != cell) continue;
    out.emplace_back(j.at("image_id").get<ImageId>(), j.at("response").get<std::string>());
  }
  return out;
}

void ResponseLog::append(std::string_view cell, const GenerationRun& run,
                         std::span<const std::pair<ImageId, std::string>> responses) const {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  for (const auto& [id, resp] : responses) {
    out << json{{"cell", cell},
                {"lvlm_id", run.lvlm_id},
                {"prompt_id", run.prompt_id},
                {"image_id", id},
                {"response", resp}}
               .dump()
        << '\n';
  }
}

GenerationRun run_generation(ChatClient& client, const LvlmTarget& target,
                             std::span<const ImageRecord> records, std::string prompt_id,
                             std::string prompt_text, const SamplingConfig& sampling,
                             const ResponseLog* log, std::string_view cell, std::size_t chunk) {
  sampling.validate();
  GenerationRun run;
  run.lvlm_id = target.endpoint_id + "/" + target.model_id;
  run.prompt_id = std::move(prompt_id);
  run.prompt_text = std::move(prompt_text);
  run.sampling = sampling;

  if (log) {
    run.responses = log->load(cell);
    if (run.responses.size() > records.size()) {
      throw IntegrityError("response log has more entries than records for cell " +
                           std::string(cell));
    }
    for (std::size_t i = 0; i < run.responses.size(); ++i) {
      if (run.responses[i].first != records[i].image_id) {
        throw IntegrityError("response log order does not match the record list for cell " +
                             std::string(cell));
      }
    }
  }

  chunk = std::max<std::size_t>(1, chunk);
  for (std::size_t begin = run.responses.size(); begin < records.size(); begin += chunk) {
    const std::size_t end = std::min(records.size(), begin + chunk);
    std::vector<ChatRequest> reqs;
    for (std::size_t i = begin; i < end; ++i) {
      ChatRequest req;
      req.endpoint_id = target.endpoint_id;
      req.model_id = target.model_id;
      req.messages = {Message{Role::user, run.prompt_text}};
      req.sampling = sampling;
      req.image = ImageRef{records[i].image_id, records[i].file_name};
      reqs.push_back(std::move(req));
    }
    const auto replies = client.send_batch(reqs);
    std::vector<std::pair<ImageId, std::string>> fresh;
    for (std::size_t k = 0; k < replies.size(); ++k) {
      fresh.emplace_back(records[begin + k].image_id, replies[k].text);
    }
    if (log) log->append(cell, run, fresh);
    run.responses.insert(run.responses.end(), fresh.begin(), fresh.end());
  }
  return run;
}

EvalOutcome evaluate_run(GenerationRun& run, Judge& judge, const CaptionStore& store) {
  std::vector<JudgeItem> items;
  items.reserve(run.responses.size());
  for (const auto& [id, resp] : run.responses) items.push_back({&store.at(id), resp});
  auto verdicts = judge.judge_batch(items);
  run.judge_id = judge.id();

  EvalOutcome out;
  out.ratio = halu_ratio(verdicts);
  out.verdicts.reserve(verdicts.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    out.verdicts.push_back(VerdictRecord{run.responses[i].first,
                                         sha256_hex(run.responses[i].second),
                                         std::move(verdicts[i])});
  }
  return out;
}

std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::max_length: return "max_length";
    case Axis::top_k: return "top_k";
    case Axis::temperature: return "temperature";
  }
  return "?";
}

Axis parse_axis(std::string_view s) {
  if (s == "max_length") return Axis::max_length;
  if (s == "top_k") return Axis::top_k;
  if (s == "temperature") return Axis::temperature;
  throw ArgumentError("unknown sweep axis '" + std::string(s) + "'");
}

SamplingConfig apply_axis(SamplingConfig fixed, Axis axis, double value) {
  if (axis != Axis::temperature && value != std::floor(value)) {
    throw ConfigError(std::string(to_string(axis)) + " takes whole numbers, got " +
                      text::fixed(value, 3));
  }
  switch (axis) {
    case Axis::max_length: fixed.max_new_tokens = static_cast<int>(value); break;
    case Axis::top_k: fixed.top_k = static_cast<int>(value); break;
    case Axis::temperature: fixed.temperature = value; break;
  }
  fixed.validate();
  return fixed;
}

std::vector<SweepPoint> sweep_axis(Axis axis, const std::vector<double>& values,
                                   const SamplingConfig& fixed, ChatClient& client,
                                   const LvlmTarget& target, std::span<const ImageRecord> records,
                                   Judge& judge, const CaptionStore& store,
                                   std::string_view prompt_text, const ResponseLog* log) {
  if (values.empty()) throw ArgumentError("sweep needs at least one axis value");
  std::vector<SweepPoint> out;
  for (double v : values) {
    SweepPoint p;
    p.value = v;
    p.sampling = apply_axis(fixed, axis, v);
    const std::string cell = std::string(to_string(axis)) + "=" + text::fixed(v, 4);
    GenerationRun run = run_generation(client, target, records, "custom",
                                       std::string(prompt_text), p.sampling, log, cell);
    EvalOutcome eval = evaluate_run(run, judge, store);
    p.ratio = eval.ratio;
    p.verdicts = std::move(eval.verdicts);
    out.push_back(std::move(p));
  }
  return out;
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = json{{"run_id", m.run_id},
           {"command", m.command},
           {"config", m.config},
           {"config_digest", m.config_digest},
           {"corpus_digest", m.corpus_digest},
           {"seed", m.seed},
           {"request_digests", m.request_digests},
           {"artifacts", m.artifacts}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  m.run_id = j.at("run_id").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.config_digest = j.at("config_digest").get<std::string>();
  m.corpus_digest = j.at("corpus_digest").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.request_digests = j.at("request_digests").get<std::vector<std::string>>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
}

std::string config_digest(const nlohmann::json& config) { return sha256_hex(config.dump()); }

std::string make_run_id(const nlohmann::json& config) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  return config_digest(config).substr(0, 12) + "-" + stamp;
}

RunManifest build_manifest(std::string run_id, std::string command, nlohmann::json config,
                           std::string corpus_digest, std::uint64_t seed,
                           std::vector<std::string> request_digests,
                           const std::filesystem::path& run_dir,
                           const std::vector<std::string>& artifact_names) {
  RunManifest m;
  m.run_id = std::move(run_id);
  m.command = std::move(command);
  m.config_digest = config_digest(config);
  m.config = std::move(config);
  m.corpus_digest = std::move(corpus_digest);
  m.seed = seed;
  m.request_digests = std::move(request_digests);
  for (const auto& name : artifact_names) {
    const auto p = run_dir / name;
    if (!std::filesystem::exists(p)) throw IntegrityError("missing artifact " + p.string());
    m.artifacts[name] = sha256_file(p);
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  text::write_file(path, json(manifest).dump(2) + "\n");
}

}  // namespace halo
