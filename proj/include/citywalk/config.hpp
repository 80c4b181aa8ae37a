#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citywalk/errors.hpp"
#include "citywalk/itinerary.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/retrieval.hpp"
#include "citywalk/spatial.hpp"

namespace citywalk {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Config {
  // [llm]
  GatewayOptions gateway;
  std::string api_base = "https://api.openai.com/v1";
  std::string api_key;
  int timeout_s = 60;
  std::string cassette;
  std::string fast_model = "fast";
  std::string strong_model = "strong";

  // [store]
  std::string poi_file;
  std::string geocoder_file;
  std::string prompts_dir;
  std::string ground_truth;

  // [retrieval]
  RetrievalOptions retrieval;

  // [spatial] and [sa]
  OrderingOptions ordering;
  std::size_t n_candidates = 15;

  // [itinerary]
  GenerateOptions generate;

  // [service]
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_body_bytes = 1 << 20;
  std::string admin_token;
  bool emit_timings = false;

  // [eval]
  std::size_t judge_trials = 0;
  std::uint64_t judge_seed = 0;
};

/// Sets one "section.key" entry from text. Throws ConfigError for unknown
/// keys and unparseable values.
void set_config_value(Config& config, const std::string& key, const std::string& value);

/// Range checks across all keys. Throws ConfigError.
void validate_config(const Config& config);

/// Every key with its current value, in a stable order.
std::vector<std::pair<std::string, std::string>> config_entries(const Config& config);

/// INI text with every key, usable as a starting config file.
std::string render_config(const Config& config);

/// Reads an INI file ("[section]" headers, "key = value" lines, ';' or '#'
/// comments) on top of the defaults. Relative paths resolve against the
/// file's directory.
Config load_config_file(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment lookup.
std::optional<std::string> process_env(const std::string& name);

/// CITYWALK_API_KEY, CITYWALK_API_BASE and CITYWALK_LLM_MODE override the
/// matching keys; CITYWALK_SECTION__KEY (double underscore) sets any key.
void apply_env(Config& config, const EnvLookup& env);

/// Defaults, then the file named by `path` (or CITYWALK_CONFIG), then env.
Config load_config(const std::optional<std::filesystem::path>& path,
                   const EnvLookup& env = process_env);

/// Keys a plan request may override.
bool overridable_per_request(const std::string& key);

}  // namespace citywalk
