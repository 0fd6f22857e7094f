#include "halo/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>
#include <set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "halo/attrib.hpp"
#include "halo/corpus.hpp"
#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/judge.hpp"
#include "halo/metrics.hpp"
#include "halo/popecheck.hpp"
#include "halo/reference_tables.hpp"
#include "halo/report.hpp"
#include "halo/simgen.hpp"
#include "halo/stubs.hpp"
#include "halo/sweeps.hpp"
#include "halo/synthetic.hpp"
#include "halo/text.hpp"

namespace halo::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void to_json(json& j, const EndpointSpec& e) {
  j = json{{"base_url", e.base_url},
           {"path", e.path},
           {"api_key_env", e.api_key_env},
           {"timeout_seconds", e.timeout_seconds},
           {"image_url_prefix", e.image_url_prefix},
           {"prompt_per_1k", e.prices.prompt_per_1k},
           {"completion_per_1k", e.prices.completion_per_1k}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown " + what + " key '" + k + "'");
  }
}

template <class T>
void read_key(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void from_json(const json& j, EndpointSpec& e) {
  reject_unknown(j,
                 {"base_url", "path", "api_key_env", "timeout_seconds", "image_url_prefix",
                  "prompt_per_1k", "completion_per_1k"},
                 "endpoint");
  e = EndpointSpec{};
  read_key(j, "base_url", e.base_url);
  read_key(j, "path", e.path);
  read_key(j, "api_key_env", e.api_key_env);
  read_key(j, "timeout_seconds", e.timeout_seconds);
  read_key(j, "image_url_prefix", e.image_url_prefix);
  read_key(j, "prompt_per_1k", e.prices.prompt_per_1k);
  read_key(j, "completion_per_1k", e.prices.completion_per_1k);
  if (e.base_url.empty()) throw ConfigError("endpoint needs a base_url");
  e.prices.validate();
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"captions", c.captions},
           {"split_file", c.split_file},
           {"split", c.split},
           {"synthetic", c.synthetic},
           {"images", c.images},
           {"seed", c.seed},
           {"endpoint", c.endpoint},
           {"model", c.model},
           {"judge", c.judge},
           {"judge_model", c.judge_model},
           {"transcript", c.transcript},
           {"planted_rate", c.planted_rate},
           {"sampling", c.sampling},
           {"n_each", c.n_each},
           {"prompts", c.prompts},
           {"axis", c.axis},
           {"values", c.values},
           {"items", c.items},
           {"describe_prompt", c.describe_prompt},
           {"input", c.input},
           {"layout", c.layout},
           {"output", c.output},
           {"norm", c.norm},
           {"label", c.label},
           {"finetune", c.finetune},
           {"finetune_command", c.finetune_command},
           {"endpoints", c.endpoints},
           {"workers", c.workers}};
}

void from_json(const json& j, RunConfig& c) {
  json defaults = RunConfig{};
  std::set<std::string> known;
  for (const auto& [k, v] : defaults.items()) known.insert(k);
  reject_unknown(j, known, "config");
  c = RunConfig{};
  read_key(j, "captions", c.captions);
  read_key(j, "split_file", c.split_file);
  read_key(j, "split", c.split);
  read_key(j, "synthetic", c.synthetic);
  read_key(j, "images", c.images);
  read_key(j, "seed", c.seed);
  read_key(j, "endpoint", c.endpoint);
  read_key(j, "model", c.model);
  read_key(j, "judge", c.judge);
  read_key(j, "judge_model", c.judge_model);
  read_key(j, "transcript", c.transcript);
  read_key(j, "planted_rate", c.planted_rate);
  if (j.contains("sampling")) {
    reject_unknown(j.at("sampling"), {"temperature", "top_k", "max_new_tokens", "greedy"},
                   "sampling");
    read_key(j, "sampling", c.sampling);
  }
  read_key(j, "n_each", c.n_each);
  read_key(j, "prompts", c.prompts);
  read_key(j, "axis", c.axis);
  read_key(j, "values", c.values);
  read_key(j, "items", c.items);
  read_key(j, "describe_prompt", c.describe_prompt);
  read_key(j, "input", c.input);
  read_key(j, "layout", c.layout);
  read_key(j, "output", c.output);
  read_key(j, "norm", c.norm);
  read_key(j, "label", c.label);
  if (j.contains("finetune")) c.finetune = j.at("finetune").get<FinetuneConfig>();
  read_key(j, "finetune_command", c.finetune_command);
  if (j.contains("endpoints")) {
    const json& eps = j.at("endpoints");
    if (!eps.is_object()) throw ConfigError("config key 'endpoints' must be an object");
    for (const auto& [id, spec] : eps.items()) c.endpoints[id] = spec.get<EndpointSpec>();
  }
  read_key(j, "workers", c.workers);
}

namespace {

// ---------------------------------------------------------------------------
// Flag plumbing: options bind into a scratch RunConfig and only the ones the
// user actually passed are copied over the config-file values.

class Bindings {
 public:
  template <class Get>
  CLI::Option* add(CLI::App* app, const std::string& name, Get get, const std::string& desc) {
    CLI::Option* o = app->add_option(name, get(flags_), desc);
    list_.emplace_back(o, [get](RunConfig& dst, RunConfig& src) { get(dst) = get(src); });
    return o;
  }
  template <class Get>
  CLI::Option* add_flag(CLI::App* app, const std::string& name, Get get, const std::string& desc) {
    CLI::Option* o = app->add_flag(name, get(flags_), desc);
    list_.emplace_back(o, [get](RunConfig& dst, RunConfig& src) { get(dst) = get(src); });
    return o;
  }
  CLI::Option* add_top_k(CLI::App* app) {
    CLI::Option* o = app->add_option("--top-k", top_k_, "top-K sampling (0 disables)");
    list_.emplace_back(o, [this](RunConfig& dst, RunConfig&) {
      dst.sampling.top_k = top_k_ > 0 ? std::optional<int>(top_k_) : std::nullopt;
    });
    return o;
  }
  void apply(RunConfig& dst) {
    for (auto& [o, f] : list_) {
      if (o->count() > 0) f(dst, flags_);
    }
  }

 private:
  RunConfig flags_;
  int top_k_ = 0;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, RunConfig&)>>> list_;
};

#define FIELD(f) [](RunConfig& c) -> auto& { return c.f; }

void data_flags(CLI::App* s, Bindings& b) {
  b.add(s, "--captions", FIELD(captions), "COCO caption files (default: synthetic images)");
  b.add(s, "--split-file", FIELD(split_file), "Karpathy split file");
  b.add(s, "--split", FIELD(split), "split to evaluate (train, val, test)");
  b.add(s, "--synthetic", FIELD(synthetic), "synthetic image count when no captions are given");
  b.add(s, "--images,--limit", FIELD(images), "sample this many images (0: all)");
  b.add(s, "--seed", FIELD(seed), "sampling seed");
}

void endpoint_flags(CLI::App* s, Bindings& b) {
  b.add(s, "--endpoint", FIELD(endpoint), "endpoint id (stub, stub-replay, planted or configured)");
  b.add(s, "--model", FIELD(model), "model id sent to the endpoint");
  b.add(s, "--transcript", FIELD(transcript), "transcript for stub-replay");
  b.add(s, "--planted-rate", FIELD(planted_rate), "hallucination rate of the planted endpoint");
  b.add(s, "--temperature", FIELD(sampling.temperature), "sampling temperature");
  b.add(s, "--max-new-tokens", FIELD(sampling.max_new_tokens), "generation length limit");
  b.add_flag(s, "--greedy", FIELD(sampling.greedy), "greedy decoding");
  b.add_top_k(s);
}

void judge_flags(CLI::App* s, Bindings& b) {
  b.add(s, "--judge", FIELD(judge), "judge: oracle or an endpoint id");
  b.add(s, "--judge-model", FIELD(judge_model), "model id of an endpoint judge");
}

// ---------------------------------------------------------------------------

struct Data {
  CaptionStore store;
  std::vector<ImageRecord> records;
};

Data load_data(const RunConfig& c, Split split) {
  Data d;
  if (c.captions.empty()) {
    auto recs = synthetic::records(c.synthetic);
    for (auto& r : recs) {
      r.split = split;
      d.store.records.emplace(r.image_id, r);
    }
    d.store.source_path = "synthetic:" + std::to_string(c.synthetic);
    d.records = std::move(recs);
  } else {
    std::vector<fs::path> paths(c.captions.begin(), c.captions.end());
    d.store = load_captions(paths);
    if (!c.split_file.empty()) {
      d.records = get_records(d.store, load_split(c.split_file), split);
    } else {
      for (const auto& [id, r] : d.store.records) d.records.push_back(r);
    }
  }
  if (c.images > 0 && c.images < d.records.size()) {
    d.records = sample_records(d.records, c.images, c.seed);
  }
  if (d.records.empty()) throw DomainError("no images selected");
  return d;
}

class Session {
 public:
  Session(const RunConfig& c, const fs::path& run_dir, const fs::path& cache_dir)
      : config_(c), cache_dir_(cache_dir) {
    ledger_ = std::make_shared<UsageLedger>(run_dir / "ledger.jsonl");
  }

  std::shared_ptr<ChatClient> client(const std::string& endpoint_id, const Data& data,
                                     const std::string& phase) {
    auto c = std::make_shared<ChatClient>(make_backend(endpoint_id, data),
                                          cache(cache_id(endpoint_id)), RetryPolicy{},
                                          config_.workers);
    Prices prices;
    if (auto it = config_.endpoints.find(endpoint_id); it != config_.endpoints.end()) {
      prices = it->second.prices;
    }
    c->attach_ledger(ledger_, prices, phase);
    clients_.push_back(c);
    return c;
  }

  std::unique_ptr<Judge> judge(const Data& data) {
    if (config_.judge == "oracle") return std::make_unique<OracleJudge>();
    return std::make_unique<EndpointJudge>(client(config_.judge, data, "judge"), config_.judge,
                                           config_.judge_model);
  }

  std::vector<std::string> digests() const {
    std::vector<std::string> out;
    for (const auto& c : clients_) {
      const auto d = c->request_digests();
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  }

  json stats() const {
    std::size_t calls = 0, hits = 0;
    for (const auto& c : clients_) {
      calls += c->backend_calls();
      hits += c->cache_hits();
    }
    return json{{"backend_calls", calls}, {"cache_hits", hits}};
  }

  const UsageLedger& ledger() const { return *ledger_; }

 private:
  std::shared_ptr<ChatBackend> make_backend(const std::string& id, const Data& data) {
    if (id == "stub") return std::make_shared<stubs::LexicalStub>(&data.store);
    if (id == "stub-replay") {
      if (config_.transcript.empty()) throw ArgumentError("stub-replay needs --transcript");
      return std::make_shared<stubs::ReplayBackend>(fs::path(config_.transcript));
    }
    if (id == "planted") {
      const double rate = config_.planted_rate;
      if (!(rate >= 0.0 && rate <= 1.0)) throw RangeError("planted rate must lie in [0, 1]");
      return std::make_shared<stubs::PlantedLvlm>(
          data.records, [rate](const SamplingConfig&) { return rate; });
    }
    auto it = config_.endpoints.find(id);
    if (it == config_.endpoints.end()) {
      throw ConfigError("unknown endpoint '" + id + "'; define it under \"endpoints\"");
    }
    HttpEndpointConfig h;
    h.base_url = it->second.base_url;
    h.path = it->second.path;
    h.api_key_env = it->second.api_key_env;
    h.timeout = std::chrono::seconds(it->second.timeout_seconds);
    h.image_url_prefix = it->second.image_url_prefix;
    return std::make_shared<HttpChatBackend>(h);
  }

  std::string cache_id(const std::string& endpoint_id) const {
    if (endpoint_id != "planted") return endpoint_id;
    return "planted-" + text::fixed(config_.planted_rate, 6);
  }

  std::shared_ptr<ResponseCache> cache(const std::string& endpoint_id) {
    auto& slot = caches_[endpoint_id];
    if (!slot) {
      std::string name = endpoint_id;
      std::replace(name.begin(), name.end(), '/', '_');
      slot = std::make_shared<ResponseCache>(cache_dir_ / (name + ".jsonl"));
    }
    return slot;
  }

  const RunConfig& config_;
  fs::path cache_dir_;
  std::map<std::string, std::shared_ptr<ResponseCache>> caches_;
  std::shared_ptr<UsageLedger> ledger_;
  std::vector<std::shared_ptr<ChatClient>> clients_;
};

struct Context {
  std::string command;
  RunConfig config;
  std::string run_id;
  fs::path run_dir;
  fs::path cache_dir;
  std::ostream& out;
};

struct Outcome {
  std::vector<std::string> artifacts;  // relative to the run directory
  std::string corpus_digest;
  std::vector<std::string> digests;  // endpoint requests in issue order
};

void write_json(const fs::path& path, const json& j) { text::write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  std::string body;
  for (const auto& l : lines) body += l.dump() + "\n";
  text::write_file(path, body);
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

const std::string& require_input(const RunConfig& c, const char* flag) {
  if (c.input.empty()) throw ArgumentError(std::string("missing required ") + flag);
  return c.input;
}

void finish_session(Context& ctx, Session& s, Outcome& o) {
  o.digests = s.digests();
  write_json(ctx.run_dir / "stats.json", s.stats());
  o.artifacts.push_back("stats.json");
  if (!s.ledger().entries().empty()) {
    text::write_file(ctx.run_dir / "usage.md", ledger_report(s.ledger(), ctx.config.model));
    o.artifacts.push_back("usage.md");
  }
}

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_collect(Context& ctx) {
  const RunConfig& c = ctx.config;
  const Data d = load_data(c, Split::train);
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto client = s.client(c.endpoint, d, "collect");
  CollectOptions o;
  o.n_each = c.n_each;
  o.seed = c.seed;
  o.endpoint_id = c.endpoint;
  o.model_id = c.model;
  o.sampling = c.sampling;
  o.output = ctx.run_dir / "data" / "sim_corpus.jsonl";
  const SimCorpus corpus = collect_sim_corpus(d.records, *client, o, ObjectVocabulary::coco());
  ctx.out << "sim corpus: " << corpus.count(SampleKind::hallucinated) << " hallucinated, "
          << corpus.count(SampleKind::faithful) << " faithful\n";
  Outcome out{{"data/sim_corpus.jsonl"}, corpus_digest(d.records), {}};
  finish_session(ctx, s, out);
  return out;
}

Outcome cmd_export_train(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SimCorpus corpus = SimCorpus::load(require_input(c, "--corpus"));
  const Data d = load_data(c, Split::train);
  const auto res = export_train_set(corpus, d.store, ctx.run_dir / "data" / "train_pairs.jsonl",
                                    ApproxTokenizer{}, c.finetune.max_input_length);
  ctx.out << "train set: " << res.written << " pairs written, " << res.dropped
          << " dropped over " << c.finetune.max_input_length << " tokens\n";
  return {{"data/train_pairs.jsonl"}, {}, {}};
}

Outcome cmd_finetune(Context& ctx) {
  const RunConfig& c = ctx.config;
  const fs::path train = require_input(c, "--train-set");
  std::unique_ptr<FinetuneBackend> backend;
  if (!c.finetune_command.empty()) {
    backend = std::make_unique<CommandFinetuneBackend>(c.finetune_command, ctx.run_dir / "configs");
  }
  const JudgeHandle h = finetune(train, c.finetune, backend.get());
  write_json(ctx.run_dir / "judge_handle.json",
             json{{"endpoint_id", h.endpoint_id}, {"model_id", h.model_id}});
  ctx.out << "judge ready: " << h.endpoint_id << "/" << h.model_id << "\n";
  Outcome out{{"judge_handle.json"}, {}, {}};
  if (backend) out.artifacts.insert(out.artifacts.begin(), "configs/finetune.json");
  return out;
}

struct ResponseItem {
  ImageId image_id;
  std::string response;
  std::optional<bool> label;
};

std::vector<ResponseItem> read_responses(const fs::path& path, bool labelled) {
  std::vector<ResponseItem> items;
  for (const json& j : read_jsonl(path)) {
    try {
      ResponseItem it{j.at("image_id").get<ImageId>(), j.at("response").get<std::string>(), {}};
      if (labelled) {
        const auto label = j.at("label").get<std::string>();
        if (label != "hallucinated" && label != "faithful") {
          throw ParseError(path.string() + ": label must be hallucinated or faithful, got '" +
                           label + "'");
        }
        it.label = label == "hallucinated";
      }
      items.push_back(std::move(it));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return items;
}

std::vector<VerdictRecord> judge_items(Judge& judge, const CaptionStore& store,
                                       const std::vector<ResponseItem>& items) {
  std::vector<JudgeItem> batch;
  batch.reserve(items.size());
  for (const auto& it : items) batch.push_back({&store.at(it.image_id), it.response});
  const auto verdicts = judge.judge_batch(batch);
  std::vector<VerdictRecord> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back({items[i].image_id, sha256_hex(items[i].response), verdicts[i]});
  }
  return out;
}

Outcome cmd_judge(Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto items = read_responses(require_input(c, "--responses"), false);
  const Data d = load_data(c, parse_split(c.split));
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto judge = s.judge(d);
  const auto records = judge_items(*judge, d.store, items);
  write_verdicts(ctx.run_dir / "verdicts.jsonl", records);
  std::vector<Verdict> vs;
  for (const auto& r : records) vs.push_back(r.verdict);
  const HaluRatio ratio = halu_ratio(vs);
  ctx.out << "hallucination ratio: " << text::fixed(ratio.percent, 1) << "% ("
          << ratio.hallucinated << "/" << ratio.parseable << ", " << ratio.unparseable
          << " unparseable)\n";
  Outcome out{{"verdicts.jsonl"}, {}, {}};
  finish_session(ctx, s, out);
  return out;
}

json prf_json(const ClassMetrics& m) { return json{{"p", m.precision}, {"r", m.recall}, {"f1", m.f1}}; }

Outcome cmd_eval_judge(Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto items = read_responses(require_input(c, "--annotations"), true);
  const Data d = load_data(c, parse_split(c.split));
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto judge = s.judge(d);
  const auto records = judge_items(*judge, d.store, items);
  write_verdicts(ctx.run_dir / "verdicts.jsonl", records);

  std::vector<std::pair<bool, bool>> pairs;
  std::size_t unparseable = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& v = records[i].verdict;
    if (!v.hallucinated) {
      ++unparseable;
      continue;
    }
    pairs.emplace_back(*v.hallucinated, *items[i].label);
  }
  const ConfusionMatrix cm = confusion(pairs);
  const SubsetAccuracy acc = subset_accuracy(cm);
  const ClassMetrics without = prf1(cm, PositiveClass::faithful);
  const ClassMetrics with = prf1(cm, PositiveClass::hallucinated);
  const std::string jid = judge->id();
  const std::string& label = c.label;

  write_json(ctx.run_dir / "judge_eval.json",
             json{{"judge", jid},
                  {"items", items.size()},
                  {"unparseable", unparseable},
                  {"confusion", cm},
                  {"accuracy",
                   {{"w/o", acc.without_hallucination}, {"w/", acc.with_hallucination},
                    {"all", acc.all}}},
                  {"prf", {{"w/o", prf_json(without)}, {"w/", prf_json(with)}}}});
  emit_report(json{{"models", {label}},
                   {"methods", {jid}},
                   {"accuracy",
                    {{jid,
                      {{"w/o", {{label, acc.without_hallucination}}},
                       {"w/", {{label, acc.with_hallucination}}},
                       {"all", {{label, acc.all}}}}}}}},
              ReportLayout::table1, ctx.run_dir / "table1.md");
  emit_report(json{{"models", {label}},
                   {"methods", {jid}},
                   {"prf",
                    {{jid,
                      {{"w/o", {{label, prf_json(without)}}}, {"w/", {{label, prf_json(with)}}}}}}}},
              ReportLayout::table2, ctx.run_dir / "table2.md");
  ctx.out << "judge " << jid << ": accuracy " << text::fixed(acc.all, 1) << "% over "
          << cm.total() << " annotated responses (" << unparseable << " unparseable)\n";
  Outcome out{{"verdicts.jsonl", "judge_eval.json", "table1.md", "table2.md"}, {}, {}};
  finish_session(ctx, s, out);
  return out;
}

json ratio_json(const HaluRatio& r) {
  return json{{"percent", r.percent},
              {"hallucinated", r.hallucinated},
              {"parseable", r.parseable},
              {"unparseable", r.unparseable}};
}

std::vector<json> verdict_lines(const std::string& cell, const std::vector<VerdictRecord>& vs) {
  std::vector<json> out;
  for (const auto& v : vs) {
    json j = v;
    j["cell"] = cell;
    out.push_back(std::move(j));
  }
  return out;
}

Outcome cmd_eval_halu(Context& ctx) {
  const RunConfig& c = ctx.config;
  const Data d = load_data(c, parse_split(c.split));
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto lvlm = s.client(c.endpoint, d, "generate");
  auto judge = s.judge(d);
  const ResponseLog log(ctx.run_dir / "responses.jsonl");

  json cells = json::object();
  json details = json::object();
  std::vector<json> verdicts;
  for (const auto& pid : c.prompts) {
    const std::string cell = "prompt=" + pid;
    GenerationRun run = run_generation(*lvlm, {c.endpoint, c.model}, d.records, pid,
                                       generation_prompt(pid), c.sampling, &log, cell);
    const EvalOutcome e = evaluate_run(run, *judge, d.store);
    cells[c.model][pid] = e.ratio.percent;
    details[pid] = ratio_json(e.ratio);
    auto lines = verdict_lines(cell, e.verdicts);
    verdicts.insert(verdicts.end(), lines.begin(), lines.end());
    ctx.out << c.model << " " << pid << ": " << text::fixed(e.ratio.percent, 1) << "%\n";
  }
  write_jsonl(ctx.run_dir / "verdicts.jsonl", verdicts);
  const json results{{"models", {c.model}}, {"prompts", c.prompts}, {"cells", cells},
                     {"details", details}, {"judge", judge->id()}};
  write_json(ctx.run_dir / "ratios.json", results);
  emit_report(results, ReportLayout::table3, ctx.run_dir / "ratio_table.md");
  Outcome out{{"responses.jsonl", "verdicts.jsonl", "ratios.json", "ratio_table.md"},
              corpus_digest(d.records), {}};
  finish_session(ctx, s, out);
  return out;
}

Outcome cmd_pope(Context& ctx) {
  const RunConfig& c = ctx.config;
  const Data d = load_data(c, parse_split(c.split));
  const auto items = c.items.empty() ? reference::kProbeItems : c.items;
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto lvlm = s.client(c.endpoint, d, "probe");
  const ProbeStore store{ctx.run_dir / "probe_results.jsonl", ctx.run_dir / "probe_cursor.json"};
  const auto results = run_probe(*lvlm, {c.endpoint, c.model, c.sampling}, d.records, items,
                                 c.describe_prompt, &store);
  const ProbeTally t = tally(results, items);
  const json summary{{"model", c.model},
                     {"tally", t},
                     {"yes_rate", t.total.qh ? t.yes_rate() : 0.0},
                     {"hallucination_rate", t.total.ay ? t.hallucination_rate() : 0.0}};
  write_json(ctx.run_dir / "tally.json", summary);
  emit_report(json{{"models", {summary}}}, ReportLayout::pope, ctx.run_dir / "pope.md");
  ctx.out << c.model << ": QH " << t.total.qh << ", AY " << t.total.ay << ", CH " << t.total.ch
          << "\n";
  Outcome out{{"probe_results.jsonl", "probe_cursor.json", "tally.json", "pope.md"},
              corpus_digest(d.records), {}};
  finish_session(ctx, s, out);
  return out;
}

Outcome cmd_sweep(Context& ctx) {
  const RunConfig& c = ctx.config;
  if (c.axis.empty()) throw ArgumentError("missing required --axis");
  if (c.values.empty()) throw ArgumentError("missing required --values");
  const Axis axis = parse_axis(c.axis);
  const Data d = load_data(c, parse_split(c.split));
  Session s(c, ctx.run_dir, ctx.cache_dir);
  auto lvlm = s.client(c.endpoint, d, "generate");
  auto judge = s.judge(d);
  const ResponseLog log(ctx.run_dir / "responses.jsonl");
  const auto points = sweep_axis(axis, c.values, c.sampling, *lvlm, {c.endpoint, c.model},
                                 d.records, *judge, d.store, c.describe_prompt, &log);
  json pts = json::array();
  std::vector<json> verdicts;
  for (const auto& p : points) {
    json pj = ratio_json(p.ratio);
    pj["value"] = p.value;
    pj["sampling"] = p.sampling;
    pts.push_back(std::move(pj));
    const std::string cell = std::string(to_string(axis)) + "=" + format_axis_value(p.value);
    auto lines = verdict_lines(cell, p.verdicts);
    verdicts.insert(verdicts.end(), lines.begin(), lines.end());
    ctx.out << to_string(axis) << "=" << format_axis_value(p.value) << ": "
            << text::fixed(p.ratio.percent, 1) << "%\n";
  }
  write_jsonl(ctx.run_dir / "verdicts.jsonl", verdicts);
  const json results{{"axis", to_string(axis)}, {"model", c.model}, {"points", pts},
                     {"judge", judge->id()}};
  write_json(ctx.run_dir / "sweep.json", results);
  emit_report(results, ReportLayout::sweep, ctx.run_dir / "sweep.md");
  Outcome out{{"responses.jsonl", "verdicts.jsonl", "sweep.json", "sweep.md", "sweep.svg"},
              corpus_digest(d.records), {}};
  finish_session(ctx, s, out);
  return out;
}

Outcome cmd_attrib(Context& ctx) {
  const RunConfig& c = ctx.config;
  const fs::path in = require_input(c, "--grads");
  const NormScheme scheme = parse_norm_scheme(c.norm);
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::directory_iterator(in)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(in);
  }
  if (files.empty()) throw IoError("no gradient files under " + in.string());
  Outcome out;
  for (const auto& f : files) {
    const AttentionMatrix a = normalize_attention(GradientMatrix::load(f), scheme);
    const std::string name = "figures/" + f.stem().string() + ".svg";
    render_heatmap(a, ctx.run_dir / name);
    out.artifacts.push_back(name);
    const auto flagged = std::count(a.degenerate.begin(), a.degenerate.end(), true);
    ctx.out << name << ": " << a.rows.size() << "x" << a.cols.size();
    if (flagged) ctx.out << ", " << flagged << " degenerate rows";
    ctx.out << "\n";
  }
  return out;
}

Outcome cmd_report(Context& ctx) {
  const RunConfig& c = ctx.config;
  const fs::path in = require_input(c, "--results");
  if (c.layout.empty()) throw ArgumentError("missing required --layout");
  const ReportLayout layout = parse_layout(c.layout);
  json results;
  try {
    results = json::parse(text::read_file(in));
  } catch (const json::exception& e) {
    throw ParseError(in.string() + ": " + e.what());
  }
  const fs::path target = c.output.empty()
                              ? ctx.run_dir / ("report_" + std::string(to_string(layout)) + ".md")
                              : fs::path(c.output);
  Outcome out;
  for (const auto& f : emit_report(results, layout, target)) {
    ctx.out << "wrote " << f.string() << "\n";
    const auto rel = fs::relative(f, ctx.run_dir);
    if (!rel.empty() && *rel.begin() != "..") out.artifacts.push_back(rel.generic_string());
  }
  return out;
}

using Handler = Outcome (*)(Context&);

fs::path fresh_run_dir(const fs::path& runs_dir, std::string& run_id, bool explicit_id) {
  fs::path dir = runs_dir / run_id;
  if (!fs::exists(dir)) return dir;
  if (explicit_id) {
    throw ArgumentError("run '" + run_id + "' already exists; pass --resume " + run_id);
  }
  for (int n = 2;; ++n) {
    const std::string candidate = run_id + "-" + std::to_string(n);
    if (!fs::exists(runs_dir / candidate)) {
      run_id = candidate;
      return runs_dir / candidate;
    }
  }
}

int execute(const std::string& command, Handler handler, RunConfig cfg, const std::string& runs_dir,
            const std::string& run_id_flag, const std::string& resume,
            const std::string& cache_dir, std::ostream& out) {
  json config_json = cfg;
  std::string run_id;
  fs::path run_dir;
  if (!resume.empty()) {
    run_id = resume;
    run_dir = fs::path(runs_dir) / run_id;
    if (!fs::is_directory(run_dir)) throw ArgumentError("no run '" + resume + "' to resume");
    const json stored = read_json(run_dir / "run.json");
    if (stored.at("command") != command) {
      throw ArgumentError("run '" + run_id + "' was started by '" +
                          stored.at("command").get<std::string>() + "', not '" + command + "'");
    }
    config_json = stored.at("config");
    cfg = config_json.get<RunConfig>();
  } else {
    const bool explicit_id = !run_id_flag.empty();
    run_id = explicit_id ? run_id_flag : make_run_id(json{{"command", command}, {"config", config_json}});
    run_dir = fresh_run_dir(runs_dir, run_id, explicit_id);
    fs::create_directories(run_dir);
    write_json(run_dir / "run.json", json{{"command", command}, {"config", config_json}});
  }

  Context ctx{command, std::move(cfg), run_id, run_dir, fs::path(cache_dir), out};
  Outcome o = handler(ctx);

  const RunManifest m = build_manifest(run_id, command, config_json, o.corpus_digest,
                                       ctx.config.seed, o.digests, run_dir, o.artifacts);
  write_manifest(run_dir / "manifest.json", m);
  out << "run " << run_id << " -> " << run_dir.string() << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hallucination evaluation harness for vision-language models", "halo-eval"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, runs_dir = "runs", run_id, resume, cache_dir = "cache";
  bool verbose = false;
  Bindings b;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--runs-dir", runs_dir, "root directory for run outputs");
  app.add_option("--run-id", run_id, "explicit run id");
  app.add_option("--resume", resume, "continue an existing run");
  app.add_option("--cache-dir", cache_dir, "response cache directory (one JSONL per endpoint)");
  b.add(&app, "--workers", FIELD(workers), "concurrent endpoint requests");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  std::vector<std::pair<CLI::App*, Handler>> commands;
  const auto sub = [&](const char* name, const char* desc, Handler h) {
    CLI::App* s = app.add_subcommand(name, desc);
    commands.emplace_back(s, h);
    return s;
  };

  CLI::App* s = sub("collect", "collect simulated hallucinated/faithful descriptions", cmd_collect);
  data_flags(s, b);
  endpoint_flags(s, b);
  b.add(s, "--n", FIELD(n_each), "samples per kind");

  s = sub("export-train", "export judge training pairs", cmd_export_train);
  data_flags(s, b);
  b.add(s, "--corpus", FIELD(input), "sim corpus JSONL");
  b.add(s, "--max-input-length", FIELD(finetune.max_input_length), "prompt token limit");

  s = sub("finetune", "fine-tune the judge through an external backend", cmd_finetune);
  b.add(s, "--train-set", FIELD(input), "training JSONL");
  b.add(s, "--backend-command", FIELD(finetune_command), "trainer command");

  s = sub("judge", "judge responses against reference captions", cmd_judge);
  data_flags(s, b);
  judge_flags(s, b);
  b.add(s, "--responses", FIELD(input), "JSONL of {image_id, response}");

  s = sub("eval-judge", "score a judge against human annotations", cmd_eval_judge);
  data_flags(s, b);
  judge_flags(s, b);
  b.add(s, "--annotations", FIELD(input), "JSONL of {image_id, response, label}");
  b.add(s, "--label", FIELD(label), "column label in the reports");

  s = sub("eval-halu", "hallucination ratio of an LVLM per generation prompt", cmd_eval_halu);
  data_flags(s, b);
  endpoint_flags(s, b);
  judge_flags(s, b);
  b.add(s, "--prompts", FIELD(prompts), "generation prompt ids")->delimiter(',');

  s = sub("pope", "absent-object yes-bias probe", cmd_pope);
  data_flags(s, b);
  endpoint_flags(s, b);
  b.add(s, "--items", FIELD(items), "probe items")->delimiter(',');
  b.add(s, "--describe-prompt", FIELD(describe_prompt), "free-form description prompt");

  s = sub("sweep", "hallucination ratio along one generation parameter", cmd_sweep);
  data_flags(s, b);
  endpoint_flags(s, b);
  judge_flags(s, b);
  b.add(s, "--axis", FIELD(axis), "max_length, top_k or temperature");
  b.add(s, "--values", FIELD(values), "axis values")->delimiter(',');
  b.add(s, "--prompt", FIELD(describe_prompt), "generation prompt text");

  s = sub("attrib", "render gradient attribution heatmaps", cmd_attrib);
  b.add(s, "--grads", FIELD(input), "gradient JSON file or directory");
  b.add(s, "--norm", FIELD(norm), "l1 or minmax");

  s = sub("report", "render a results file as Markdown (and SVG for sweeps)", cmd_report);
  b.add(s, "--results", FIELD(input), "results JSON");
  b.add(s, "--layout", FIELD(layout), "table1, table2, table3, sweep or pope");
  b.add(s, "--out", FIELD(output), "output Markdown path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      try {
        cfg = json::parse(text::read_file(config_path)).get<RunConfig>();
      } catch (const json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
    }
    b.apply(cfg);
    cfg.sampling.validate();
    if (cfg.workers == 0) throw ArgumentError("--workers must be positive");
    for (const auto& [sc, handler] : commands) {
      if (sc->parsed()) {
        return execute(sc->get_name(), handler, std::move(cfg), runs_dir, run_id, resume,
                       cache_dir, out);
      }
    }
    err << app.help();
    return 2;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace halo::cli
