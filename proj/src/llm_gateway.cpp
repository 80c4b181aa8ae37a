#include "citywalk/llm_gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <thread>

#include "citywalk/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> parse_vector(const std::string& text) {
  const json j = json::parse(text);
  return j.get<std::vector<double>>();
}

}  // namespace

std::string_view to_string(LlmMode mode) {
  switch (mode) {
    case LlmMode::live: return "live";
    case LlmMode::record: return "record";
    case LlmMode::replay: return "replay";
    case LlmMode::stub: return "stub";
  }
  return "replay";
}

std::optional<LlmMode> parse_llm_mode(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "live") return LlmMode::live;
  if (t == "record") return LlmMode::record;
  if (t == "replay") return LlmMode::replay;
  if (t == "stub") return LlmMode::stub;
  return std::nullopt;
}

std::string fingerprint(const ChatRequest& request) {
  std::string payload = "model_tag=" + request.model_tag +
                        "\ntemperature=" + format_double(request.temperature) +
                        "\nprompt=\n" + normalize_prompt(request.prompt);
  return sha256_hex(payload);
}

std::string embedding_fingerprint(std::string_view model_tag, std::string_view text) {
  return fingerprint(ChatRequest{std::string(text), 0.0, 0, "embed:" + std::string(model_tag)});
}

// ---------------------------------------------------------------- Cassette

Cassette::Cassette(std::filesystem::path path) {
  if (std::filesystem::exists(path)) entries_ = load(path).entries_;
  path_ = std::move(path);
}

std::optional<std::string> Cassette::lookup(const std::string& fp) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(fp);
  if (it == entries_.end()) return std::nullopt;
  return it->second.response;
}

void Cassette::record(const std::string& fp, Entry entry) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(fp, std::move(entry));
  if (path_) save_locked(*path_);
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::map<std::string, Cassette::Entry> Cassette::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void Cassette::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  save_locked(path);
}

void Cassette::save_locked(const std::filesystem::path& path) const {
  json j = json::object();
  for (const auto& [fp, e] : entries_) {
    j[fp] = json{{"response", e.response}, {"model_tag", e.model_tag}, {"recorded_at", e.recorded_at}};
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cassette: " + path.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Cassette::Cassette(Cassette&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  entries_ = std::move(other.entries_);
  path_ = std::move(other.path_);
}

Cassette Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open cassette: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed cassette " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("cassette must be a JSON object: " + path.string());
  Cassette c;
  for (const auto& [fp, v] : j.items()) {
    if (!v.is_object() || !v.contains("response") || !v.at("response").is_string()) {
      throw ParseError("cassette entry " + fp + " lacks a string response");
    }
    c.entries_[fp] = Entry{v.at("response").get<std::string>(), v.value("model_tag", ""),
                           v.value("recorded_at", "")};
  }
  return c;
}

// ---------------------------------------------------------------- Transports

HttpTransport::HttpTransport(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  while (!base_url.empty() && base_url.back() == '/') base_url.pop_back();
  const auto scheme_end = base_url.find("://");
  const auto path_start =
      base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    origin_ = base_url;
  } else {
    origin_ = base_url.substr(0, path_start);
    path_prefix_ = base_url.substr(path_start);
  }
}

std::string HttpTransport::post(const std::string& endpoint, const std::string& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_prefix_ + endpoint, headers, body, "application/json");
  if (!res) {
    throw TransportError("HTTP request to " + origin_ + " failed: " + httplib::to_string(res.error()),
                         true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("provider returned HTTP " + std::to_string(res->status), true);
  }
  if (res->status >= 400) {
    throw TransportError("provider returned HTTP " + std::to_string(res->status) + ": " + res->body,
                         false);
  }
  return res->body;
}

std::string HttpTransport::chat(const ChatRequest& request) {
  const json body{{"model", request.model_tag},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens},
                  {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
  const auto reply = post("/chat/completions", body.dump());
  try {
    const json j = json::parse(reply);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat response: ") + e.what(), false);
  }
}

std::vector<std::vector<double>> HttpTransport::embed(const std::vector<std::string>& texts,
                                                      const std::string& model_tag) {
  const json body{{"model", model_tag}, {"input", texts}};
  const auto reply = post("/embeddings", body.dump());
  try {
    const json j = json::parse(reply);
    std::vector<std::vector<double>> out(texts.size());
    for (const auto& item : j.at("data")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= out.size()) throw TransportError("embedding index out of range", false);
      out[index] = item.at("embedding").get<std::vector<double>>();
    }
    for (const auto& v : out) {
      if (v.empty()) throw TransportError("provider omitted an embedding", false);
    }
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected embedding response: ") + e.what(), false);
  }
}

std::string OfflineTransport::chat(const ChatRequest&) {
  throw TransportError("network access is disabled", false);
}

std::vector<std::vector<double>> OfflineTransport::embed(const std::vector<std::string>&,
                                                         const std::string&) {
  throw TransportError("network access is disabled", false);
}

// ---------------------------------------------------------------- TokenBucket

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / rate_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    lock.lock();
  }
}

// ---------------------------------------------------------------- stub_embed

std::vector<double> stub_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  std::vector<double> v(dim, 0.0);
  for (const auto& token : fuzzy_tokens(text)) {
    std::uint64_t state = fnv1a(token);
    for (int k = 0; k < 8; ++k) {
      const std::uint64_t r = splitmix64(state);
      const std::size_t index = static_cast<std::size_t>((r & 0xFFFFFFFFULL) % dim);
      v[index] += (r >> 63) ? -1.0 : 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[0] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// ---------------------------------------------------------------- LlmGateway

LlmGateway::LlmGateway(GatewayOptions options, std::shared_ptr<Transport> transport,
                       std::shared_ptr<Cassette> cassette, Clock clock)
    : options_(std::move(options)),
      transport_(transport ? std::move(transport) : std::make_shared<OfflineTransport>()),
      cassette_(cassette ? std::move(cassette) : std::make_shared<Cassette>()),
      clock_(std::move(clock)),
      limiter_(std::make_unique<TokenBucket>(options_.requests_per_second, options_.burst)) {}

std::string LlmGateway::now() const { return clock_ ? clock_() : utc_now(); }

template <typename Fn>
auto LlmGateway::with_retries(Fn&& fn) -> decltype(fn()) {
  auto delay = options_.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      limiter_->acquire();
      return fn();
    } catch (const TransportError& e) {
      if (!e.retriable()) throw GatewayError(e.what(), false);
      if (attempt >= options_.max_retries) {
        throw GatewayError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                               " attempts)",
                           true);
      }
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

std::string LlmGateway::chat(const ChatRequest& request) { return chat(request, options_.chat_mode); }

std::string LlmGateway::chat(const ChatRequest& request, LlmMode mode) {
  if (trim(request.prompt).empty()) throw std::invalid_argument("prompt must not be empty");
  switch (mode) {
    case LlmMode::replay: {
      const auto fp = fingerprint(request);
      if (auto hit = cassette_->lookup(fp)) return *hit;
      throw CassetteMiss(fp);
    }
    case LlmMode::live:
      return with_retries([&] { return transport_->chat(request); });
    case LlmMode::record: {
      auto response = with_retries([&] { return transport_->chat(request); });
      cassette_->record(fingerprint(request), {response, request.model_tag, now()});
      return response;
    }
    case LlmMode::stub:
      throw GatewayError("stub mode provides embeddings only; chat needs live, record or replay",
                         false);
  }
  throw GatewayError("unknown mode", false);
}

std::vector<std::vector<double>> LlmGateway::embed(const std::vector<std::string>& texts) {
  return embed(texts, options_.embed_mode);
}

std::vector<std::vector<double>> LlmGateway::embed(const std::vector<std::string>& texts,
                                                   LlmMode mode) {
  if (texts.empty()) throw std::invalid_argument("embed needs at least one text");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  switch (mode) {
    case LlmMode::stub:
      for (const auto& t : texts) out.push_back(stub_embed(t, options_.embedding_dim));
      return out;
    case LlmMode::replay:
      for (const auto& t : texts) {
        const auto fp = embedding_fingerprint(options_.embed_model, t);
        auto hit = cassette_->lookup(fp);
        if (!hit) throw CassetteMiss(fp);
        out.push_back(parse_vector(*hit));
      }
      return out;
    case LlmMode::live:
      return with_retries([&] { return transport_->embed(texts, options_.embed_model); });
    case LlmMode::record: {
      out = with_retries([&] { return transport_->embed(texts, options_.embed_model); });
      for (std::size_t i = 0; i < texts.size(); ++i) {
        cassette_->record(embedding_fingerprint(options_.embed_model, texts[i]),
                          {json(out[i]).dump(), options_.embed_model, now()});
      }
      return out;
    }
  }
  throw GatewayError("unknown mode", false);
}

}  // namespace citywalk
