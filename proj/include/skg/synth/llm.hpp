#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "skg/core/value.hpp"
#include "skg/error.hpp"
#include "skg/util/rng.hpp"

namespace skg::synth {

struct LlmClientConfig {
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name = "complaint-scene-generator";
  std::string auth_token_env_name = "SKG_LLM_TOKEN";
  Decimal temperature{7, 1};
  /// Verification always runs at temperature 0.
  Decimal verify_temperature{0, 0};
  std::int64_t max_output_tokens = 4096;
  std::int64_t request_timeout_seconds = 120;
  int max_retries = 4;
  std::chrono::milliseconds backoff_base{1000};
  double backoff_factor = 2.0;
  double backoff_jitter = 0.2;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct LlmRequest {
  std::vector<ChatMessage> messages;
  Decimal temperature;
  std::int64_t max_tokens = 0;
  // Routing context for local clients; never sent over the wire.
  std::string stage;
  std::string case_id;
};

struct LlmReply {
  std::string text;
  int retries = 0;
};

/// Chat-completion service. Implementations throw TransportError once retries
/// are exhausted and AuthError for rejected credentials.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmReply complete(const LlmRequest& request) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Delay before retry number `attempt` (0-based): base * factor^attempt,
/// scaled by a uniform jitter factor in [1 - jitter, 1 + jitter].
std::chrono::milliseconds backoff_delay(const LlmClientConfig& cfg, int attempt, double unit_draw);

/// HTTP client speaking the chat-completions shape: POST {model, messages,
/// temperature, max_tokens}, reply text at choices[0].message.content.
/// Retries transport failures, 5xx and 429 with exponential backoff; 401 and
/// 403 are AuthError at once.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(LlmClientConfig cfg, Sleeper sleeper = {}, std::uint64_t jitter_seed = 0);
  LlmReply complete(const LlmRequest& request) override;

 private:
  LlmClientConfig cfg_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  util::Rng jitter_;
  std::string token_;
  std::string origin_;
  std::string path_;
};

/// Caps concurrent requests and the token budget (max_tokens per minute)
/// in front of another client.
class ThrottledClient : public LlmClient {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  ThrottledClient(LlmClient& inner, std::size_t max_concurrent, std::int64_t tokens_per_minute = 0,
                  Sleeper sleeper = {}, Clock clock = {});
  LlmReply complete(const LlmRequest& request) override;

  std::size_t peak_concurrency() const;

 private:
  void reserve_tokens(std::int64_t n);

  LlmClient& inner_;
  std::size_t max_concurrent_;
  std::int64_t tokens_per_minute_;
  Sleeper sleeper_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
  std::deque<std::pair<std::chrono::steady_clock::time_point, std::int64_t>> spent_;
};

/// Replays a fixed script of replies in order; an entry with an error code
/// throws that error instead. Records every request it receives.
class ScriptedLlmClient : public LlmClient {
 public:
  struct Step {
    std::string text;
    std::optional<Errc> error;
  };
  explicit ScriptedLlmClient(std::vector<Step> script) : script_(std::move(script)) {}
  LlmReply complete(const LlmRequest& request) override;

  const std::vector<LlmRequest>& requests() const { return requests_; }

 private:
  std::mutex mutex_;
  std::vector<Step> script_;
  std::size_t next_ = 0;
  std::vector<LlmRequest> requests_;
};

}  // namespace skg::synth
