#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "citywalk/llm_gateway.hpp"

namespace citywalk::testing {

enum class OrderPolicy { keep, shuffle, reverse };
enum class JudgePolicy { fair, first_wins };

struct FakeLlmOptions {
  OrderPolicy order = OrderPolicy::keep;
  JudgePolicy judge = JudgePolicy::fair;
  /// Place names the direct-planning baseline may mention.
  std::vector<std::string> known_names;
  /// Chat calls after this many succeed throw a non-retriable TransportError.
  std::size_t fail_after = SIZE_MAX;
  std::size_t embedding_dim = 256;
};

/// Rule-based stand-in for a chat model. The prompt's "## Task:" header picks
/// the behaviour; replies are a pure function of the prompt text.
class FakeLlm : public Transport {
 public:
  explicit FakeLlm(FakeLlmOptions options = {}) : options_(std::move(options)) {}

  std::string chat(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_tag) override;

  std::size_t chat_calls() const { return chat_calls_; }

 private:
  FakeLlmOptions options_;
  std::atomic<std::size_t> chat_calls_{0};
};

/// Replies from a fixed queue, then repeats the last reply. Records prompts.
class ScriptedLlm : public Transport {
 public:
  explicit ScriptedLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string chat(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_tag) override;

  const std::vector<ChatRequest>& requests() const { return requests_; }

 private:
  std::vector<std::string> replies_;
  std::vector<ChatRequest> requests_;
};

/// Gateway calling `transport` directly, without a cassette.
std::shared_ptr<LlmGateway> live_gateway(std::shared_ptr<Transport> transport);

/// Text between <tag> and </tag>, trimmed; empty when absent.
std::string between_tags(const std::string& text, const std::string& tag);

/// Decomposition the fake produces for a request, as a JSON array string.
std::string fake_decomposition(const std::string& request);

/// Gateway recording every chat through `transport` into `cassette`.
std::shared_ptr<LlmGateway> recording_gateway(std::shared_ptr<Transport> transport,
                                              std::shared_ptr<Cassette> cassette);
/// Gateway answering only from `cassette`.
std::shared_ptr<LlmGateway> replay_gateway(std::shared_ptr<Cassette> cassette);

}  // namespace citywalk::testing
