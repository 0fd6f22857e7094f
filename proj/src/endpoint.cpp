#include "halo/endpoint.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  return std::string(body.substr(0, kMax));
}

json response_to_json(const std::string& key, const ChatResponse& r) {
  return json{{"key", key},
              {"text", r.text},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens},
              {"latency", r.latency_seconds}};
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

void SamplingConfig::validate() const {
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (top_k && *top_k < 1) throw ConfigError("top_k must be >= 1");
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
}

void to_json(nlohmann::json& j, const SamplingConfig& s) {
  j = json{{"temperature", s.effective_temperature()},
           {"max_new_tokens", s.max_new_tokens},
           {"greedy", s.greedy}};
  j["top_k"] = s.top_k ? json(*s.top_k) : json(nullptr);
}

void from_json(const nlohmann::json& j, SamplingConfig& s) {
  s = SamplingConfig{};
  s.temperature = j.value("temperature", s.temperature);
  s.max_new_tokens = j.value("max_new_tokens", s.max_new_tokens);
  s.greedy = j.value("greedy", s.greedy);
  if (j.contains("top_k")) {
    s.top_k = j.at("top_k").is_null() ? std::nullopt : std::optional<int>(j.at("top_k").get<int>());
  }
}

void ChatRequest::validate() const {
  if (messages.empty()) throw ArgumentError("chat request has no messages");
  if (messages.back().role != Role::user) {
    throw ArgumentError("last message of a chat request must be a user turn");
  }
  sampling.validate();
}

std::string canonical_serialization(const ChatRequest& request) {
  json msgs = json::array();
  for (const auto& m : request.messages) {
    msgs.push_back(json{{"role", to_string(m.role)}, {"text", m.text}});
  }
  json j{{"endpoint_id", request.endpoint_id},
         {"model_id", request.model_id},
         {"messages", std::move(msgs)},
         {"sampling", request.sampling}};
  j["seed"] = request.seed ? json(*request.seed) : json(nullptr);
  j["image"] = request.image ? json{{"image_id", request.image->image_id},
                                    {"file_name", request.image->file_name}}
                             : json(nullptr);
  // nlohmann::json objects are key-sorted; dump() with no indent is compact.
  return j.dump();
}

std::string cache_key(const ChatRequest& request) {
  return sha256_hex(canonical_serialization(request));
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpChatBackend::HttpChatBackend(HttpEndpointConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("http endpoint needs a base_url");
}

nlohmann::json HttpChatBackend::encode(const ChatRequest& request) const {
  json msgs = json::array();
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    const auto& m = request.messages[i];
    const bool attach = request.image && !config_.image_url_prefix.empty() &&
                        i + 1 == request.messages.size();
    if (attach) {
      json content = json::array();
      content.push_back(json{{"type", "text"}, {"text", m.text}});
      content.push_back(json{{"type", "image_url"},
                             {"image_url", {{"url", config_.image_url_prefix +
                                                        request.image->file_name}}}});
      msgs.push_back(json{{"role", to_string(m.role)}, {"content", std::move(content)}});
    } else {
      msgs.push_back(json{{"role", to_string(m.role)}, {"content", m.text}});
    }
  }
  json body{{"model", request.model_id},
            {"messages", std::move(msgs)},
            {"max_tokens", request.sampling.max_new_tokens},
            {"temperature", request.sampling.effective_temperature()},
            {"stream", false}};
  if (request.sampling.greedy) {
    body["top_k"] = 1;
  } else if (request.sampling.top_k) {
    body["top_k"] = *request.sampling.top_k;
  }
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

BackendReply HttpChatBackend::decode(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("chat completion body is not JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ParseError("chat completion body: missing key 'choices'");
  }
  const json& choice = doc["choices"][0];
  BackendReply reply;
  reply.status = 200;
  reply.body = body;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    reply.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    reply.text = choice["text"].get<std::string>();
  } else {
    throw ParseError("chat completion body: missing key 'choices[0].message.content'");
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& u = doc["usage"];
    if (u.contains("prompt_tokens")) reply.prompt_tokens = u["prompt_tokens"].get<std::uint64_t>();
    if (u.contains("completion_tokens")) {
      reply.completion_tokens = u["completion_tokens"].get<std::uint64_t>();
    }
  }
  return reply;
}

BackendReply HttpChatBackend::complete(const ChatRequest& request) {
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(config_.timeout);
  cli.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = cli.Post(config_.path, headers, encode(request).dump(), "application/json");
  if (!res) {
    BackendReply failed;
    failed.status = 0;
    failed.body = httplib::to_string(res.error());
    return failed;
  }
  if (res->status < 200 || res->status >= 300) {
    BackendReply failed;
    failed.status = res->status;
    failed.body = res->body;
    return failed;
  }
  BackendReply reply = decode(res->body);
  reply.status = res->status;
  return reply;
}

// ---------------------------------------------------------------------------
// Cache

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      spdlog::warn("cache {}: skipping torn line", path_->string());
      continue;
    }
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::uint64_t>();
    r.completion_tokens = j.at("completion_tokens").get<std::uint64_t>();
    r.latency_seconds = j.value("latency", 0.0);
    entries_.insert_or_assign(j.at("key").get<std::string>(), std::move(r));
  }
}

std::optional<ChatResponse> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  ChatResponse r = it->second;
  r.cached = true;
  return r;
}

void ResponseCache::store(const std::string& key, const ChatResponse& response) {
  std::unique_lock lock(mu_);
  ChatResponse r = response;
  r.cached = false;
  entries_.insert_or_assign(key, r);
  if (!path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path_->string());
  out << response_to_json(key, r).dump() << '\n';
  out.flush();
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Retries

std::chrono::milliseconds RetryPolicy::backoff_before_retry(int retry) const {
  return initial_backoff * (1LL << std::max(0, retry - 1));
}

ChatResponse send_chat(ChatBackend& backend, const ChatRequest& request, ResponseCache* cache,
                       const RetryPolicy& retry) {
  request.validate();
  const std::string key = cache_key(request);
  if (cache) {
    if (auto hit = cache->lookup(key)) return *hit;
  }

  BackendReply reply;
  double latency = 0.0;
  int attempt = 0;
  const int budget = std::max(1, retry.max_attempts);
  while (true) {
    ++attempt;
    const auto t0 = std::chrono::steady_clock::now();
    reply = backend.complete(request);
    latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (reply.status >= 200 && reply.status < 300) break;
    if (!retryable(reply.status)) throw EndpointError(reply.status, excerpt(reply.body));
    if (attempt >= budget) {
      throw TransportError("endpoint " + request.endpoint_id + " failed after " +
                               std::to_string(attempt) + " attempts (last status " +
                               std::to_string(reply.status) + ": " + excerpt(reply.body) + ")",
                           attempt);
    }
    const auto delay = retry.backoff_before_retry(attempt);
    spdlog::debug("endpoint {}: status {}, retrying in {} ms", request.endpoint_id, reply.status,
                  delay.count());
    if (retry.sleep) {
      retry.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }

  if (is_blank(reply.text)) {
    throw EmptyResponseError("endpoint " + request.endpoint_id + " returned an empty completion");
  }
  ChatResponse response;
  response.text = reply.text;
  response.prompt_tokens = reply.prompt_tokens.value_or(0);
  response.completion_tokens = reply.completion_tokens.value_or(0);
  response.latency_seconds = latency;
  response.cached = false;
  if (cache) cache->store(key, response);
  return response;
}

// ---------------------------------------------------------------------------
// Ledger

void Prices::validate() const {
  if (prompt_per_1k < 0 || completion_per_1k < 0) throw ConfigError("prices must be >= 0");
}

double UsageEntry::cost() const {
  if (cached) return 0.0;
  return static_cast<double>(prompt_tokens) / 1000.0 * prices.prompt_per_1k +
         static_cast<double>(completion_tokens) / 1000.0 * prices.completion_per_1k;
}

void to_json(nlohmann::json& j, const UsageEntry& e) {
  j = json{{"digest", e.digest},
           {"model_id", e.model_id},
           {"phase", e.phase},
           {"prompt_tokens", e.prompt_tokens},
           {"completion_tokens", e.completion_tokens},
           {"prompt_price_per_1k", e.prices.prompt_per_1k},
           {"completion_price_per_1k", e.prices.completion_per_1k},
           {"wall_seconds", e.wall_seconds},
           {"cached", e.cached},
           {"cost", e.cost()}};
}

void from_json(const nlohmann::json& j, UsageEntry& e) {
  e.digest = j.at("digest").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.phase = j.value("phase", std::string{});
  e.prompt_tokens = j.at("prompt_tokens").get<std::uint64_t>();
  e.completion_tokens = j.at("completion_tokens").get<std::uint64_t>();
  e.prices.prompt_per_1k = j.at("prompt_price_per_1k").get<double>();
  e.prices.completion_per_1k = j.at("completion_price_per_1k").get<double>();
  e.wall_seconds = j.at("wall_seconds").get<double>();
  e.cached = j.at("cached").get<bool>();
}

UsageLedger::UsageLedger(std::filesystem::path path) : path_(std::move(path)) {}

const UsageEntry& UsageLedger::append(UsageEntry entry) {
  entries_.push_back(std::move(entry));
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw IoError("cannot append to ledger " + path_->string());
    out << json(entries_.back()).dump() << '\n';
  }
  return entries_.back();
}

double UsageLedger::total_cost() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.cost();
  return total;
}

double UsageLedger::total_seconds() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.wall_seconds;
  return total;
}

UsageLedger UsageLedger::load(const std::filesystem::path& path) {
  UsageLedger ledger;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read ledger " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ledger.entries_.push_back(json::parse(line).get<UsageEntry>());
  }
  return ledger;
}

UsageEntry record_usage(UsageLedger& ledger, const ChatRequest& request,
                        const ChatResponse& response, const Prices& prices,
                        std::string_view phase) {
  prices.validate();
  UsageEntry e;
  e.digest = cache_key(request);
  e.model_id = request.model_id;
  e.phase = std::string(phase);
  e.prompt_tokens = response.prompt_tokens;
  e.completion_tokens = response.completion_tokens;
  e.prices = prices;
  e.cached = response.cached;
  e.wall_seconds = response.cached ? 0.0 : response.latency_seconds;
  return ledger.append(std::move(e));
}

std::string format_time_cost(double seconds, double dollars) {
  return text::fixed(seconds / 3600.0, 1) + "h, " + text::fixed(dollars, 1) + "$";
}

std::string ledger_report(const UsageLedger& ledger, std::string_view row_label) {
  std::vector<std::string> phases;
  std::map<std::string, std::pair<double, double>> totals;
  for (const auto& e : ledger.entries()) {
    if (!totals.count(e.phase)) phases.push_back(e.phase);
    auto& [secs, cost] = totals[e.phase];
    secs += e.wall_seconds;
    cost += e.cost();
  }
  std::string header = "| Method |";
  std::string sub = "| |";
  std::string rule = "|---|";
  std::string row = "| " + std::string(row_label) + " |";
  for (const auto& p : phases) {
    const auto& [secs, cost] = totals[p];
    header += " " + (p.empty() ? std::string("all") : p) + " | |";
    sub += " Time | Cost |";
    rule += "---|---|";
    row += " " + text::fixed(secs / 3600.0, 1) + "h | " + text::fixed(cost, 1) + "$ |";
  }
  return header + "\n" + sub + "\n" + rule + "\n" + row + "\n";
}

// ---------------------------------------------------------------------------
// Client

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
                       RetryPolicy retry, unsigned workers)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      retry_(std::move(retry)),
      workers_(std::max(1u, workers)) {
  if (!backend_) throw ArgumentError("chat client needs a backend");
}

void ChatClient::attach_ledger(std::shared_ptr<UsageLedger> ledger, Prices prices,
                               std::string phase) {
  prices.validate();
  std::lock_guard lock(mu_);
  ledger_ = std::move(ledger);
  prices_ = prices;
  phase_ = std::move(phase);
}

void ChatClient::set_phase(std::string phase) {
  std::lock_guard lock(mu_);
  phase_ = std::move(phase);
}

ChatResponse ChatClient::send_one(const ChatRequest& request, const std::string& key) {
  const bool hit = cache_ && cache_->lookup(key).has_value();
  ChatResponse r = send_chat(*backend_, request, cache_.get(), retry_);
  if (hit) {
    ++cache_hits_;
  } else {
    ++backend_calls_;
  }
  std::lock_guard lock(mu_);
  if (ledger_) record_usage(*ledger_, request, r, prices_, phase_);
  return r;
}

ChatResponse ChatClient::send(const ChatRequest& request) {
  request.validate();
  const std::string key = cache_key(request);
  {
    std::lock_guard lock(mu_);
    digests_.push_back(key);
  }
  return send_one(request, key);
}

std::vector<BatchOutcome> ChatClient::try_send_batch(const std::vector<ChatRequest>& requests) {
  std::vector<std::string> keys;
  keys.reserve(requests.size());
  for (const auto& r : requests) {
    r.validate();
    keys.push_back(cache_key(r));
  }
  {
    std::lock_guard lock(mu_);
    digests_.insert(digests_.end(), keys.begin(), keys.end());
  }
  std::vector<BatchOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i].response = send_one(requests[i], keys[i]);
      } catch (...) {
        out[i].error = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(workers_, static_cast<unsigned>(requests.size()));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
  }
  return out;
}

std::vector<ChatResponse> ChatClient::send_batch(const std::vector<ChatRequest>& requests) {
  auto outcomes = try_send_batch(requests);
  std::vector<ChatResponse> out;
  out.reserve(outcomes.size());
  for (auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
    out.push_back(std::move(*o.response));
  }
  return out;
}

std::vector<std::string> ChatClient::request_digests() const {
  std::lock_guard lock(mu_);
  return digests_;
}

}  // namespace halo
