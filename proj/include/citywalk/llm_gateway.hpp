#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citywalk/errors.hpp"

namespace citywalk {

/// live: provider call. record: provider call persisted to the cassette.
/// replay: cassette only, never touches the network. stub: deterministic
/// local embeddings (embeddings only).
enum class LlmMode { live, record, replay, stub };

std::string_view to_string(LlmMode mode);
std::optional<LlmMode> parse_llm_mode(std::string_view text);

struct ChatRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_tag;
};

/// Hex SHA-256 over (model_tag, temperature, normalized prompt).
std::string fingerprint(const ChatRequest& request);
/// Fingerprint of one text submitted to an embedding model.
std::string embedding_fingerprint(std::string_view model_tag, std::string_view text);

class GatewayError : public Error {
 public:
  GatewayError(const std::string& what, bool retriable) : Error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

class CassetteMiss : public GatewayError {
 public:
  explicit CassetteMiss(const std::string& fp)
      : GatewayError("cassette miss: " + fp, false), fingerprint_(fp) {}
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

/// Raised by transports. `retriable` marks network failures, 429 and 5xx.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retriable) : Error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

/// Recorded fingerprint -> response map. File form is a JSON object keyed by
/// fingerprint with {response, model_tag, recorded_at} values. Thread-safe;
/// writes are serialized and, when bound to a path, persisted immediately.
class Cassette {
 public:
  struct Entry {
    std::string response;
    std::string model_tag;
    std::string recorded_at;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Cassette() = default;
  /// Binds to `path`, loading it when it exists.
  explicit Cassette(std::filesystem::path path);
  Cassette(Cassette&& other) noexcept;
  Cassette& operator=(Cassette&&) = delete;

  std::optional<std::string> lookup(const std::string& fp) const;
  void record(const std::string& fp, Entry entry);
  std::size_t size() const;
  std::map<std::string, Entry> entries() const;

  void save(const std::filesystem::path& path) const;
  static Cassette load(const std::filesystem::path& path);

 private:
  void save_locked(const std::filesystem::path& path) const;

  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::optional<std::filesystem::path> path_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string chat(const ChatRequest& request) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                 const std::string& model_tag) = 0;
};

/// JSON-over-HTTP client for the common chat-completions / embeddings API
/// shape. `base_url` like "https://api.openai.com/v1".
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string base_url, std::string api_key,
                std::chrono::seconds timeout = std::chrono::seconds(60));
  std::string chat(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_tag) override;

 private:
  std::string post(const std::string& endpoint, const std::string& body);

  std::string origin_;
  std::string path_prefix_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// Refuses every call. Used for offline configurations.
class OfflineTransport : public Transport {
 public:
  std::string chat(const ChatRequest&) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>&,
                                         const std::string&) override;
};

class TokenBucket {
 public:
  /// rate <= 0 disables limiting.
  TokenBucket(double rate_per_second, double burst);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct GatewayOptions {
  LlmMode chat_mode = LlmMode::replay;
  LlmMode embed_mode = LlmMode::stub;
  std::string embed_model = "stub-256";
  std::size_t embedding_dim = 256;
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};
  double requests_per_second = 0.0;
  double burst = 1.0;
};

/// Deterministic offline embedding: every token (lowercased, split on
/// non-alphanumerics) hashes to 8 coordinates with +-1 contributions, then the
/// vector is L2-normalized. Token-free text maps to the first basis vector.
std::vector<double> stub_embed(std::string_view text, std::size_t dim = 256);

class LlmGateway {
 public:
  using Clock = std::function<std::string()>;

  LlmGateway(GatewayOptions options, std::shared_ptr<Transport> transport,
             std::shared_ptr<Cassette> cassette, Clock clock = {});

  std::string chat(const ChatRequest& request);
  std::string chat(const ChatRequest& request, LlmMode mode);

  /// Order of outputs follows `texts`. Throws std::invalid_argument on an
  /// empty list.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, LlmMode mode);
  std::vector<double> embed_one(const std::string& text) { return embed({text}).front(); }

  const GatewayOptions& options() const { return options_; }
  const std::string& embed_model() const { return options_.embed_model; }

 private:
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn());

  std::string now() const;

  GatewayOptions options_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Cassette> cassette_;
  Clock clock_;
  std::unique_ptr<TokenBucket> limiter_;
};

}  // namespace citywalk
