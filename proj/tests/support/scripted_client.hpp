#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "echosim/errors.hpp"
#include "echosim/llm_client.hpp"

namespace echosim::testing {

// Returns queued replies in order, then falls back to `fallback(prompt)`.
class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(std::function<std::string(const std::string&)> fallback = nullptr)
      : fallback_(std::move(fallback)) {}

  void push(std::string reply) {
    std::lock_guard lock(mu_);
    replies_.push_back(std::move(reply));
  }

  ChatResponse complete(const ChatRequest& request) override {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    ChatResponse r;
    if (!replies_.empty()) {
      r.content = replies_.front();
      replies_.pop_front();
    } else if (fallback_) {
      r.content = fallback_(request.messages.back().content);
    } else {
      throw TransportError("script exhausted");
    }
    return r;
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  std::function<std::string(const std::string&)> fallback_;
  mutable std::mutex mu_;
  std::deque<std::string> replies_;
  std::vector<ChatRequest> requests_;
};

}  // namespace echosim::testing
