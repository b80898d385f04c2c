#include "skg/synth/llm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace skg::synth {

using nlohmann::json;

namespace {

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

std::chrono::milliseconds backoff_delay(const LlmClientConfig& cfg, int attempt, double unit_draw) {
  const double scale = 1.0 + cfg.backoff_jitter * (2.0 * unit_draw - 1.0);
  const double ms = static_cast<double>(cfg.backoff_base.count()) * std::pow(cfg.backoff_factor, attempt) * scale;
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

HttpLlmClient::HttpLlmClient(LlmClientConfig cfg, Sleeper sleeper, std::uint64_t jitter_seed)
    : cfg_(std::move(cfg)), sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)), jitter_(jitter_seed) {
  if (cfg_.max_retries < 0) throw Error(Errc::BadRequest, "max_retries must be >= 0");
  if (cfg_.temperature < Decimal(0, 0)) throw Error(Errc::BadRequest, "temperature must be >= 0");
  const char* token = std::getenv(cfg_.auth_token_env_name.c_str());
  if (token == nullptr || *token == '\0') {
    throw Error(Errc::AuthError, "environment variable " + cfg_.auth_token_env_name + " holds no token",
                {{"env", cfg_.auth_token_env_name}});
  }
  token_ = token;
  const auto scheme = cfg_.endpoint_url.find("://");
  if (scheme == std::string::npos) throw Error(Errc::BadRequest, "endpoint_url needs a scheme: " + cfg_.endpoint_url);
  const auto slash = cfg_.endpoint_url.find('/', scheme + 3);
  origin_ = cfg_.endpoint_url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : cfg_.endpoint_url.substr(slash);
}

LlmReply HttpLlmClient::complete(const LlmRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  const json body{{"model", cfg_.model_name},
                  {"messages", messages},
                  {"temperature", request.temperature.to_double()},
                  {"max_tokens", request.max_tokens > 0 ? request.max_tokens : cfg_.max_output_tokens}};
  const auto payload = body.dump();
  const httplib::Headers headers{{"Authorization", "Bearer " + token_}};

  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(std::chrono::seconds(cfg_.request_timeout_seconds));
    cli.set_read_timeout(std::chrono::seconds(cfg_.request_timeout_seconds));
    cli.set_write_timeout(std::chrono::seconds(cfg_.request_timeout_seconds));
    auto res = cli.Post(path_, headers, payload, "application/json");
    bool retryable = true;
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthError, "model service rejected the credentials (HTTP " + std::to_string(res->status) + ")",
                  {{"status", res->status}});
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = false;
    } else {
      json reply;
      try {
        reply = json::parse(res->body);
        return {reply.at("choices").at(0).at("message").at("content").get<std::string>(), attempt};
      } catch (const json::exception& e) {
        last_error = std::string("malformed completion body: ") + e.what();
        retryable = false;
      }
    }
    if (!retryable || attempt >= cfg_.max_retries) {
      throw Error(Errc::TransportError, last_error, {{"attempts", attempt + 1}});
    }
    double draw = 0;
    {
      std::lock_guard lock(rng_mutex_);
      draw = jitter_.unit();
    }
    sleeper_(backoff_delay(cfg_, attempt, draw));
  }
}

ThrottledClient::ThrottledClient(LlmClient& inner, std::size_t max_concurrent, std::int64_t tokens_per_minute,
                                 Sleeper sleeper, Clock clock)
    : inner_(inner),
      max_concurrent_(std::max<std::size_t>(1, max_concurrent)),
      tokens_per_minute_(tokens_per_minute),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })) {}

void ThrottledClient::reserve_tokens(std::int64_t n) {
  if (tokens_per_minute_ <= 0) return;
  n = std::min(n, tokens_per_minute_);
  while (true) {
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard lock(mutex_);
      const auto now = clock_();
      while (!spent_.empty() && now - spent_.front().first >= std::chrono::minutes(1)) spent_.pop_front();
      std::int64_t used = 0;
      for (const auto& s : spent_) used += s.second;
      if (used + n <= tokens_per_minute_) {
        spent_.emplace_back(now, n);
        return;
      }
      wait = std::chrono::duration_cast<std::chrono::milliseconds>(spent_.front().first + std::chrono::minutes(1) - now);
    }
    sleeper_(std::max(wait, std::chrono::milliseconds(1)));
  }
}

LlmReply ThrottledClient::complete(const LlmRequest& request) {
  reserve_tokens(request.max_tokens);
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return active_ < max_concurrent_; });
    ++active_;
    peak_ = std::max(peak_, active_);
  }
  struct Release {
    ThrottledClient& self;
    ~Release() {
      {
        std::lock_guard lock(self.mutex_);
        --self.active_;
      }
      self.slot_free_.notify_one();
    }
  } release{*this};
  return inner_.complete(request);
}

std::size_t ThrottledClient::peak_concurrency() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

LlmReply ScriptedLlmClient::complete(const LlmRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (next_ >= script_.size()) throw Error(Errc::TransportError, "script exhausted");
  const auto& step = script_[next_++];
  if (step.error) throw Error(*step.error, "scripted failure");
  return {step.text, 0};
}

}  // namespace skg::synth
