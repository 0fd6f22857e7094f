#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"

namespace halo {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);

struct Message {
  Role role = Role::user;
  std::string text;

  bool operator==(const Message&) const = default;
};

/// Decoding controls. When greedy is set the client records temperature 0
/// and the endpoint is asked for argmax decoding.
struct SamplingConfig {
  double temperature = 1.0;
  std::optional<int> top_k = 3;
  int max_new_tokens = 512;
  bool greedy = false;

  double effective_temperature() const { return greedy ? 0.0 : temperature; }
  /// Throws ConfigError on temperature < 0, top_k < 1 or max_new_tokens < 1.
  void validate() const;

  bool operator==(const SamplingConfig&) const = default;
};

void to_json(nlohmann::json& j, const SamplingConfig& s);
void from_json(const nlohmann::json& j, SamplingConfig& s);

/// Identifies the image an LVLM request is about. Only ids travel; the
/// harness never touches pixels.
struct ImageRef {
  ImageId image_id = 0;
  std::string file_name;

  bool operator==(const ImageRef&) const = default;
};

struct ChatRequest {
  std::string endpoint_id;
  std::string model_id;
  std::vector<Message> messages;
  SamplingConfig sampling;
  std::optional<std::int64_t> seed;
  std::optional<ImageRef> image;

  /// Throws ArgumentError unless messages is non-empty and ends with a user
  /// turn.
  void validate() const;
  /// Text of the final user message.
  const std::string& last_user_text() const { return messages.back().text; }
};

struct ChatResponse {
  std::string text;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  double latency_seconds = 0.0;
  bool cached = false;
};

/// Canonical byte form of a request: compact JSON with sorted keys, no
/// insignificant whitespace. Greedy requests serialize temperature 0.
std::string canonical_serialization(const ChatRequest& request);

/// SHA-256 hex of canonical_serialization.
std::string cache_key(const ChatRequest& request);

/// What a backend produced for one attempt. status 0 means the connection
/// itself failed.
struct BackendReply {
  int status = 200;
  std::string text;
  std::optional<std::uint64_t> prompt_tokens;
  std::optional<std::uint64_t> completion_tokens;
  std::string body;  // raw body, kept for error excerpts
};

/// One transport to a chat-completion service. Implementations must be safe
/// to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply complete(const ChatRequest& request) = 0;
};

struct HttpEndpointConfig {
  std::string base_url;                      // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string api_key_env;                   // empty: no Authorization header
  std::chrono::seconds timeout{120};
  std::string image_url_prefix;              // set for LVLM endpoints
};

/// OpenAI-style chat-completion protocol over HTTP(S).
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpointConfig config);
  BackendReply complete(const ChatRequest& request) override;

  /// Request body as sent on the wire.
  nlohmann::json encode(const ChatRequest& request) const;
  /// Extracts text and usage from a 2xx body. Throws ParseError.
  static BackendReply decode(const std::string& body);

 private:
  HttpEndpointConfig config_;
};

/// Response cache keyed by cache_key, persisted as append-only JSONL.
///
/// One writer, many readers. A torn final line from an interrupted write is
/// ignored on load.
class ResponseCache {
 public:
  /// In-memory only.
  ResponseCache() = default;
  /// Loads `path` if it exists; new entries are appended to it.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<ChatResponse> lookup(const std::string& key) const;
  void store(const std::string& key, const ChatResponse& response);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, ChatResponse> entries_;
};

/// Attempt budget for transient failures (connection errors, 429, 5xx).
/// The delay before retry k (k = 1, 2, ...) is initial_backoff * 2^(k-1).
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for

  std::chrono::milliseconds backoff_before_retry(int retry) const;
};

/// Cache-aware single request with retries.
///
/// On a cache hit no backend call is made and the stored response comes back
/// with cached = true. Throws TransportError when retries are exhausted,
/// EndpointError on other non-success statuses, EmptyResponseError when the
/// completion is blank.
ChatResponse send_chat(ChatBackend& backend, const ChatRequest& request, ResponseCache* cache,
                       const RetryPolicy& retry = {});

struct Prices {
  double prompt_per_1k = 0.0;      // dollars
  double completion_per_1k = 0.0;  // dollars

  void validate() const;
};

struct UsageEntry {
  std::string digest;
  std::string model_id;
  std::string phase;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  Prices prices;
  double wall_seconds = 0.0;
  bool cached = false;

  double cost() const;
};

void to_json(nlohmann::json& j, const UsageEntry& e);
void from_json(const nlohmann::json& j, UsageEntry& e);

/// Append-only usage ledger; optionally mirrored to a JSONL file.
class UsageLedger {
 public:
  UsageLedger() = default;
  explicit UsageLedger(std::filesystem::path path);

  const UsageEntry& append(UsageEntry entry);
  const std::vector<UsageEntry>& entries() const { return entries_; }
  double total_cost() const;
  double total_seconds() const;

  /// Reads a ledger file written by a previous run.
  static UsageLedger load(const std::filesystem::path& path);

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<UsageEntry> entries_;
};

/// Appends the entry for one exchange. Cached responses cost nothing and
/// take no wall time. Throws ConfigError on negative prices.
UsageEntry record_usage(UsageLedger& ledger, const ChatRequest& request,
                        const ChatResponse& response, const Prices& prices,
                        std::string_view phase = "");

/// "1.6h, 6.6$": hours and dollars, one decimal each.
std::string format_time_cost(double seconds, double dollars);

/// Markdown table with one Time/Cost column pair per phase, in order of
/// first appearance.
std::string ledger_report(const UsageLedger& ledger, std::string_view row_label);

/// Outcome of one request inside a batch.
struct BatchOutcome {
  std::optional<ChatResponse> response;
  std::exception_ptr error;
};

/// Request executor with a cache, retry policy, worker bound and optional
/// usage ledger. Results of batches come back in input order.
class ChatClient {
 public:
  ChatClient(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
             RetryPolicy retry = {}, unsigned workers = 4);

  void attach_ledger(std::shared_ptr<UsageLedger> ledger, Prices prices, std::string phase);
  void set_phase(std::string phase);

  ChatResponse send(const ChatRequest& request);
  /// Throws the first error encountered (in input order).
  std::vector<ChatResponse> send_batch(const std::vector<ChatRequest>& requests);
  /// Never throws for per-request failures.
  std::vector<BatchOutcome> try_send_batch(const std::vector<ChatRequest>& requests);

  /// Digests of every request issued through this client, in input order.
  std::vector<std::string> request_digests() const;
  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  unsigned workers() const { return workers_; }
  ChatBackend& backend() { return *backend_; }

 private:
  ChatResponse send_one(const ChatRequest& request, const std::string& key);

  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  unsigned workers_;
  std::shared_ptr<UsageLedger> ledger_;
  Prices prices_;
  std::string phase_;
  mutable std::mutex mu_;
  std::vector<std::string> digests_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace halo
