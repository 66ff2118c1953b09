#include "htp/backends.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "htp/error.hpp"
#include "htp/hypotest.hpp"
#include "httplib.h"

namespace htp {

using json = nlohmann::json;
using std::chrono::milliseconds;
using Clock = std::chrono::steady_clock;

namespace {

milliseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<milliseconds>(Clock::now() - start);
}

bool transient(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

std::optional<milliseconds> retry_after(const httplib::Result& res) {
  if (!res || !res->has_header("Retry-After")) return std::nullopt;
  const std::string value = res->get_header_value("Retry-After");
  char* end = nullptr;
  double seconds = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || seconds < 0) return std::nullopt;
  return milliseconds(static_cast<long long>(seconds * 1000));
}

}  // namespace

CompletionResult OracleBackend::complete(const CompletionRequest& request) {
  const auto start = Clock::now();
  CompletionResult out{request.example_id, "", {}, std::nullopt, std::nullopt, name()};
  try {
    ParsedQuestion q = parse_question(target_question_of(request.prompt));
    PromptStyle style = request.style.value_or(style_of(request.prompt).value_or(PromptStyle::Standard));
    switch (style) {
      case PromptStyle::Standard:
        out.text = to_string(verdict(q.theory, request.assumption, q.conclusion).value);
        break;
      case PromptStyle::CoT:
        out.text = answer_text(build_exemplar(q.theory, q.conclusion, request.assumption, style));
        break;
      case PromptStyle::HypothesisTesting:
        out.text = render_trace(hypothesis_test(q.theory, q.conclusion, request.assumption),
                                TraceStyle::Narrative, &q.theory);
        break;
    }
  } catch (const BackendError&) {
    throw;
  } catch (const Error& e) {
    throw BackendError(BackendError::Kind::BadResponse,
                       "oracle cannot answer " + request.example_id + ": " + e.what());
  }
  out.latency = since(start);
  return out;
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open fixture file " + path, 0);
  std::map<std::string, std::string> completions;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path + ": invalid JSON: " + e.what(), n);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("completion") ||
        !j["completion"].is_string()) {
      throw FormatError(path + ": expected {\"id\": string, \"completion\": string}", n);
    }
    if (!completions.emplace(j["id"].get<std::string>(), j["completion"].get<std::string>()).second) {
      throw FormatError(path + ": duplicate id '" + j["id"].get<std::string>() + "'", n);
    }
  }
  return ScriptedBackend(std::move(completions));
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& request) {
  auto it = completions_.find(request.example_id);
  if (it == completions_.end()) {
    throw BackendError(BackendError::Kind::MissingFixture,
                       "no scripted completion for '" + request.example_id + "'");
  }
  return CompletionResult{request.example_id, it->second, milliseconds(0), std::nullopt,
                          std::nullopt, name()};
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw UsageError("http.base_url is required for the http backend");
  if (config_.model.empty()) throw UsageError("http.model is required for the http backend");
  if (config_.max_in_flight < 1) throw UsageError("http.max_in_flight must be at least 1");
  if (config_.requests_per_minute < 0) throw UsageError("http.requests_per_minute must be >= 0");
  if (config_.max_attempts < 1) throw UsageError("max_attempts must be at least 1");
}

json HttpBackend::request_body(const std::string& model, const CompletionRequest& request) {
  json body;
  body["model"] = model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.params.temperature;
  body["max_tokens"] = request.params.max_tokens;
  if (!request.params.stop.empty()) body["stop"] = request.params.stop;
  return body;
}

void HttpBackend::pause(milliseconds d) const {
  if (d <= milliseconds(0)) return;
  if (config_.sleep) {
    config_.sleep(d);
  } else {
    std::this_thread::sleep_for(d);
  }
}

void HttpBackend::acquire_slot() {
  std::unique_lock lock(mutex_);
  slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
  ++in_flight_;
}

void HttpBackend::release_slot() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slot_free_.notify_one();
}

void HttpBackend::wait_for_rate() {
  if (config_.requests_per_minute == 0) return;
  for (;;) {
    milliseconds wait{0};
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      while (!sent_.empty() && now - sent_.front() >= config_.rate_window) sent_.pop_front();
      if (sent_.size() < static_cast<std::size_t>(config_.requests_per_minute)) {
        sent_.push_back(now);
        return;
      }
      wait = std::chrono::duration_cast<milliseconds>(sent_.front() + config_.rate_window - now) +
             milliseconds(1);
    }
    std::this_thread::sleep_for(wait);
  }
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  const auto start = Clock::now();
  const std::string body = request_body(config_.model, request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  milliseconds backoff = config_.initial_backoff;
  std::string last_problem;
  bool rate_limited = false;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    wait_for_rate();
    acquire_slot();
    httplib::Result res{nullptr, httplib::Error::Unknown};
    try {
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      res = client.Post(config_.path, headers, body, "application/json");
    } catch (...) {
      release_slot();
      throw BackendError(BackendError::Kind::Transport, "invalid endpoint " + config_.base_url);
    }
    release_slot();

    std::optional<milliseconds> hinted;
    if (!res) {
      last_problem = "transport error: " + httplib::to_string(res.error());
      rate_limited = false;
    } else if (res->status == 200) {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw BackendError(BackendError::Kind::BadResponse, std::string("reply is not JSON: ") + e.what());
      }
      const json* content = nullptr;
      if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
        const json& choice = reply["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
          content = &choice["message"]["content"];
        }
      }
      if (!content) throw BackendError(BackendError::Kind::BadResponse, "reply has no choices[0].message.content");
      CompletionResult out{request.example_id, content->get<std::string>(), since(start),
                           std::nullopt, std::nullopt, name()};
      if (reply.contains("usage") && reply["usage"].is_object()) {
        const json& usage = reply["usage"];
        if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer())
          out.prompt_tokens = usage["prompt_tokens"].get<int>();
        if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer())
          out.completion_tokens = usage["completion_tokens"].get<int>();
      }
      return out;
    } else if (transient(res->status)) {
      last_problem = "HTTP " + std::to_string(res->status);
      rate_limited = res->status == 429;
      hinted = retry_after(res);
    } else {
      throw BackendError(BackendError::Kind::BadResponse,
                         "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    if (attempt == config_.max_attempts) break;
    pause(std::min(hinted.value_or(backoff), config_.max_backoff));
    backoff = std::min(backoff * 2, config_.max_backoff);
  }
  throw BackendError(rate_limited ? BackendError::Kind::RateLimitExhausted : BackendError::Kind::Transport,
                     "giving up on " + request.example_id + " after " +
                         std::to_string(config_.max_attempts) + " attempts (" + last_problem + ")");
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "http") return BackendKind::Http;
  if (text == "oracle") return BackendKind::Oracle;
  if (text == "scripted") return BackendKind::Scripted;
  throw UsageError("unknown backend '" + std::string(text) + "' (http|oracle|scripted)");
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Scripted: return "scripted";
  }
  return "oracle";
}

namespace {

const json* lookup(const json& config, const std::string& dotted) {
  if (auto it = config.find(dotted); it != config.end()) return &*it;
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) return nullptr;
  auto outer = config.find(dotted.substr(0, dot));
  if (outer == config.end() || !outer->is_object()) return nullptr;
  auto inner = outer->find(dotted.substr(dot + 1));
  return inner == outer->end() ? nullptr : &*inner;
}

std::optional<std::string> string_key(const json& config, const std::string& key) {
  const json* v = lookup(config, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw UsageError("config key " + key + " must be a string");
  return v->get<std::string>();
}

std::optional<int> int_key(const json& config, const std::string& key) {
  const json* v = lookup(config, key);
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) throw UsageError("config key " + key + " must be an integer");
  return v->get<int>();
}

}  // namespace

BackendConfig backend_config_from_json(const json& config) {
  if (!config.is_object()) throw UsageError("backend config must be a JSON object");
  BackendConfig out;
  if (auto kind = string_key(config, "backend")) out.kind = parse_backend_kind(*kind);
  if (auto v = string_key(config, "http.base_url")) out.http.base_url = *v;
  if (auto v = string_key(config, "http.path")) out.http.path = *v;
  if (auto v = string_key(config, "http.model")) out.http.model = *v;
  if (auto v = int_key(config, "http.max_in_flight")) out.http.max_in_flight = *v;
  if (auto v = int_key(config, "http.requests_per_minute")) out.http.requests_per_minute = *v;
  if (auto v = int_key(config, "http.max_attempts")) out.http.max_attempts = *v;
  if (auto v = string_key(config, "scripted.fixture_path")) out.fixture_path = *v;
  if (const char* key = std::getenv("MODEL_API_KEY")) out.http.api_key = key;
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::Oracle:
      return std::make_unique<OracleBackend>();
    case BackendKind::Scripted:
      if (config.fixture_path.empty()) throw UsageError("scripted.fixture_path is required");
      return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(config.fixture_path));
    case BackendKind::Http:
      return std::make_unique<HttpBackend>(config.http);
  }
  throw UsageError("unknown backend");
}

}  // namespace htp
