#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace echosim {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  double frequency_penalty = 0.0;
  std::optional<int> max_tokens;
};

struct ChatResponse {
  std::string content;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  double latency_ms = 0.0;
};

// Anything that turns a chat request into one completion. The HTTP client is
// the production implementation; tests substitute scripted fakes.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Exponential backoff with bounded multiplicative jitter:
//   delay(k) = min(max_delay, initial * multiplier^k * (1 + jitter * u)),  u in [0, 1)
// With jitter < multiplier - 1 consecutive delays never decrease.
struct BackoffPolicy {
  std::chrono::milliseconds initial_delay{500};
  std::chrono::milliseconds max_delay{30'000};
  double multiplier = 2.0;
  double jitter = 0.5;

  std::chrono::milliseconds delay_for(int retry_index, double unit_random) const;
};

struct HttpClientOptions {
  std::string endpoint;  // full URL, e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string api_key;
  int max_attempts = 5;
  int max_in_flight = 8;
  std::chrono::milliseconds timeout{60'000};
  BackoffPolicy backoff;
  bool debug = false;
  // Injected so tests can observe delays without sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Counting gate bounding concurrent requests.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : limit_(limit < 1 ? 1 : limit) {}

  void acquire();
  void release();
  int peak() const;

  class Guard {
   public:
    explicit Guard(InFlightLimiter& l) : limiter_(l) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter& limiter_;
  };

 private:
  const int limit_;
  int active_ = 0;
  int peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientOptions options);

  // Reads the key from `api_key_env`; throws ConfigError when it is unset.
  static HttpClientOptions options_from_env(const std::string& endpoint,
                                            const std::string& api_key_env);

  ChatResponse complete(const ChatRequest& request) override;

  int peak_in_flight() const { return limiter_.peak(); }

 private:
  struct Target {
    std::string scheme_host_port;
    std::string path;
  };
  static Target split_url(const std::string& url);

  HttpClientOptions options_;
  Target target_;
  InFlightLimiter limiter_;
};

std::string chat_request_to_json(const ChatRequest& request);
// Extracts choices[0].message.content and usage. Throws TransportError on a
// body that is not a well-formed completion.
ChatResponse parse_chat_response(const std::string& body);

// Replaces every occurrence of `secret` with a fixed marker.
std::string redact(std::string text, const std::string& secret);

}  // namespace echosim
