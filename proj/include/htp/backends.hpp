#pragma once

// Completion backends behind one interface: a chat-completion HTTP client,
// an engine-backed oracle and a fixture replay.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "htp/engine.hpp"
#include "htp/promptkit.hpp"
#include "json.hpp"

namespace htp {

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::vector<std::string> stop;
};

struct CompletionRequest {
  std::string example_id;
  std::string prompt;
  DecodingParams params;
  // Hints for the oracle; the HTTP and scripted backends ignore them.
  std::optional<PromptStyle> style;
  WorldAssumption assumption = WorldAssumption::OWA;
};

struct CompletionResult {
  std::string example_id;
  std::string text;
  std::chrono::milliseconds latency{0};
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  std::string backend;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Throws BackendError. Safe to call from several threads.
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Re-parses the target question out of the prompt and answers it with
/// hypothesis testing, in the prompt's style.
class OracleBackend : public Backend {
 public:
  std::string name() const override { return "oracle"; }
  CompletionResult complete(const CompletionRequest& request) override;
};

/// Exact lookup by example id in a line-delimited {"id", "completion"} file.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> completions)
      : completions_(std::move(completions)) {}
  /// Throws FormatError on a malformed or duplicate line.
  static ScriptedBackend from_file(const std::string& path);
  std::string name() const override { return "scripted"; }
  CompletionResult complete(const CompletionRequest& request) override;
  std::size_t size() const { return completions_.size(); }

 private:
  std::map<std::string, std::string> completions_;
};

struct HttpConfig {
  std::string base_url;  // e.g. "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;  // sent as a bearer token when non-empty
  int max_in_flight = 4;
  int requests_per_minute = 60;  // 0 disables the limiter
  std::chrono::milliseconds rate_window{60000};
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{16000};
  std::chrono::seconds timeout{120};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

/// Chat-completions wire shape: {"model", "messages": [{"role": "user",
/// "content": prompt}], "temperature", "max_tokens", "stop"}; the reply's
/// choices[0].message.content is the completion.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  std::string name() const override { return "http"; }
  CompletionResult complete(const CompletionRequest& request) override;

  static nlohmann::json request_body(const std::string& model, const CompletionRequest& request);

 private:
  void acquire_slot();
  void release_slot();
  void wait_for_rate();
  void pause(std::chrono::milliseconds d) const;

  HttpConfig config_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  std::deque<std::chrono::steady_clock::time_point> sent_;
};

enum class BackendKind { Http, Oracle, Scripted };
BackendKind parse_backend_kind(std::string_view text);  // throws UsageError
std::string to_string(BackendKind kind);

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  HttpConfig http;
  std::string fixture_path;
};

/// Reads the keys backend, http.base_url, http.model, http.max_in_flight,
/// http.requests_per_minute, scripted.fixture_path, either dotted or nested.
/// The API key comes from MODEL_API_KEY. Throws UsageError.
BackendConfig backend_config_from_json(const nlohmann::json& config);

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace htp
