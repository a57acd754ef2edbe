#include "echosim/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <json.hpp>

#include "echosim/errors.hpp"
#include "echosim/log.hpp"

namespace echosim {
namespace {

using json = nlohmann::json;

bool is_transient_status(int status) { return status == 429 || status >= 500; }

double jitter_sample() {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

}  // namespace

std::chrono::milliseconds BackoffPolicy::delay_for(int retry_index, double unit_random) const {
  const double u = std::clamp(unit_random, 0.0, std::nextafter(1.0, 0.0));
  const double jit = std::clamp(jitter, 0.0, std::max(0.0, multiplier - 1.0));
  const double base = static_cast<double>(initial_delay.count()) * std::pow(multiplier, retry_index);
  const double d = std::min(static_cast<double>(max_delay.count()), base * (1.0 + jit * u));
  return std::chrono::milliseconds(static_cast<long long>(d));
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

int InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::string chat_request_to_json(const ChatRequest& r) {
  json body;
  body["model"] = r.model;
  body["messages"] = json::array();
  for (const auto& m : r.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  body["temperature"] = r.temperature;
  body["frequency_penalty"] = r.frequency_penalty;
  if (r.max_tokens) body["max_tokens"] = *r.max_tokens;
  return body.dump();
}

ChatResponse parse_chat_response(const std::string& body) {
  ChatResponse out;
  try {
    const auto j = json::parse(body);
    const auto& msg = j.at("choices").at(0).at("message");
    out.content = msg.at("content").get<std::string>();
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      out.prompt_tokens = u->value("prompt_tokens", 0);
      out.completion_tokens = u->value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion body: ") + e.what());
  }
  return out;
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(secret, pos)) != std::string::npos) {
    text.replace(pos, secret.size(), "[REDACTED]");
    pos += 10;
  }
  return text;
}

HttpChatClient::Target HttpChatClient::split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatClient::HttpChatClient(HttpClientOptions options)
    : options_(std::move(options)),
      target_(split_url(options_.endpoint)),
      limiter_(options_.max_in_flight) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (target_.scheme_host_port.rfind("https://", 0) == 0) {
    throw ConfigError("this build has no TLS support; use an http:// endpoint");
  }
#endif
}

HttpClientOptions HttpChatClient::options_from_env(const std::string& endpoint,
                                                   const std::string& api_key_env) {
  const char* key = std::getenv(api_key_env.c_str());
  if (!key || !*key) {
    throw ConfigError("missing API credential: environment variable " + api_key_env + " is not set");
  }
  HttpClientOptions o;
  o.endpoint = endpoint;
  o.api_key = key;
  return o;
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  const std::string body = chat_request_to_json(request);
  if (options_.debug) log::write(log::Level::kWarn, "request " + redact(body, options_.api_key));

  InFlightLimiter::Guard guard(limiter_);
  std::string last_failure;
  const int attempts = std::max(1, options_.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) options_.sleep(options_.backoff.delay_for(attempt - 1, jitter_sample()));

    httplib::Client cli(target_.scheme_host_port);
    const auto secs = options_.timeout.count() / 1000;
    const auto usecs = (options_.timeout.count() % 1000) * 1000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers{{"Authorization", "Bearer " + options_.api_key}};

    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(target_.path, headers, body, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      log::warn(last_failure + " (attempt " + std::to_string(attempt + 1) + ")");
      continue;
    }
    if (options_.debug) {
      log::write(log::Level::kWarn, "response " + std::to_string(res->status) + " " +
                                        redact(res->body, options_.api_key));
    }
    if (res->status >= 200 && res->status < 300) {
      auto out = parse_chat_response(res->body);
      out.latency_ms = elapsed.count();
      return out;
    }
    if (!is_transient_status(res->status)) {
      throw RequestError(res->status, "request rejected with HTTP " + std::to_string(res->status) +
                                          ": " + redact(res->body, options_.api_key));
    }
    last_failure = "HTTP " + std::to_string(res->status);
    log::warn(last_failure + " (attempt " + std::to_string(attempt + 1) + ")");
  }
  throw TransportError("gave up after " + std::to_string(attempts) + " attempts: " + last_failure);
}

}  // namespace echosim
