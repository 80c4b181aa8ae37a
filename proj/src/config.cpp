#include "citywalk/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "citywalk/text.hpp"

namespace citywalk {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ConfigError("config " + key + ": not a number: '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = to_lower(trim(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config " + key + ": not a boolean: '" + text + "'");
}

LlmMode parse_mode(const std::string& key, const std::string& text) {
  if (auto m = parse_llm_mode(trim(text))) return *m;
  throw ConfigError("config " + key + ": unknown mode '" + text + "'");
}

struct Field {
  const char* key;
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define CW_STRING(KEY, MEMBER)                                                             \
  Field {                                                                                  \
    KEY, [](Config& c, const std::string&, const std::string& v) { c.MEMBER = trim(v); }, \
        [](const Config& c) { return c.MEMBER; }                                          \
  }
#define CW_NUMBER(KEY, MEMBER, TYPE)                                                    \
  Field {                                                                               \
    KEY,                                                                                \
        [](Config& c, const std::string& k, const std::string& v) {                     \
          c.MEMBER = parse_number<TYPE>(k, v);                                          \
        },                                                                              \
        [](const Config& c) {                                                           \
          if constexpr (std::is_floating_point_v<TYPE>) return format_double(c.MEMBER); \
          else return std::to_string(c.MEMBER);                                         \
        }                                                                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"llm.chat_mode",
            [](Config& c, const std::string& k, const std::string& v) {
              c.gateway.chat_mode = parse_mode(k, v);
            },
            [](const Config& c) { return std::string(to_string(c.gateway.chat_mode)); }},
      Field{"llm.embed_mode",
            [](Config& c, const std::string& k, const std::string& v) {
              c.gateway.embed_mode = parse_mode(k, v);
            },
            [](const Config& c) { return std::string(to_string(c.gateway.embed_mode)); }},
      CW_STRING("llm.api_base", api_base),
      CW_STRING("llm.api_key", api_key),
      CW_NUMBER("llm.timeout_s", timeout_s, int),
      CW_STRING("llm.cassette", cassette),
      CW_STRING("llm.fast_model", fast_model),
      CW_STRING("llm.strong_model", strong_model),
      CW_STRING("llm.embed_model", gateway.embed_model),
      CW_NUMBER("llm.embedding_dim", gateway.embedding_dim, std::size_t),
      CW_NUMBER("llm.max_retries", gateway.max_retries, int),
      Field{"llm.backoff_ms",
            [](Config& c, const std::string& k, const std::string& v) {
              c.gateway.backoff = std::chrono::milliseconds(parse_number<long long>(k, v));
            },
            [](const Config& c) { return std::to_string(c.gateway.backoff.count()); }},
      CW_NUMBER("llm.requests_per_second", gateway.requests_per_second, double),
      CW_NUMBER("llm.burst", gateway.burst, double),

      CW_STRING("store.poi_file", poi_file),
      CW_STRING("store.geocoder_file", geocoder_file),
      CW_STRING("store.prompts_dir", prompts_dir),
      CW_STRING("store.ground_truth", ground_truth),

      CW_NUMBER("retrieval.k_per_subrequest", retrieval.k_per_subrequest, std::size_t),
      CW_NUMBER("retrieval.final_k", retrieval.final_k, std::size_t),
      CW_NUMBER("retrieval.mustsee_score", retrieval.mustsee_score, double),
      Field{"retrieval.fuzzy_threshold",
            [](Config& c, const std::string& k, const std::string& v) {
              c.retrieval.fuzzy_threshold = parse_number<int>(k, v);
              c.ordering.fuzzy_threshold = c.retrieval.fuzzy_threshold;
            },
            [](const Config& c) { return std::to_string(c.retrieval.fuzzy_threshold); }},

      CW_NUMBER("spatial.tau_meters", ordering.tau_meters, double),
      CW_NUMBER("spatial.n_candidates", n_candidates, std::size_t),
      CW_NUMBER("spatial.exact_solver_max_n", ordering.exact_max_n, std::size_t),
      CW_NUMBER("sa.t_init", ordering.sa.t_init, double),
      CW_NUMBER("sa.t_min", ordering.sa.t_min, double),
      CW_NUMBER("sa.alpha", ordering.sa.alpha, double),
      CW_NUMBER("sa.max_iters", ordering.sa.max_iters, std::size_t),
      CW_NUMBER("sa.seed", ordering.sa.seed, std::uint64_t),

      CW_NUMBER("itinerary.fallback_length", generate.fallback_length, std::size_t),
      CW_NUMBER("itinerary.temperature", generate.temperature, double),
      CW_NUMBER("itinerary.max_tokens", generate.max_tokens, int),

      CW_STRING("service.host", host),
      CW_NUMBER("service.port", port, int),
      CW_NUMBER("service.max_body_bytes", max_body_bytes, std::size_t),
      CW_STRING("service.admin_token", admin_token),
      Field{"service.emit_timings",
            [](Config& c, const std::string& k, const std::string& v) {
              c.emit_timings = parse_bool(k, v);
            },
            [](const Config& c) { return std::string(c.emit_timings ? "true" : "false"); }},

      CW_NUMBER("eval.judge_trials", judge_trials, std::size_t),
      CW_NUMBER("eval.judge_seed", judge_seed, std::uint64_t),
  };
  return table;
}

#undef CW_STRING
#undef CW_NUMBER

const char* const kPathKeys[] = {"llm.cassette", "store.poi_file", "store.geocoder_file",
                                 "store.prompts_dir", "store.ground_truth"};

}  // namespace

void validate_config(const Config& c) {
  if (c.timeout_s <= 0) throw ConfigError("config llm.timeout_s must be positive");
  if (c.gateway.embedding_dim == 0) throw ConfigError("config llm.embedding_dim must be positive");
  if (c.gateway.max_retries < 0) throw ConfigError("config llm.max_retries must be >= 0");
  if (c.retrieval.k_per_subrequest == 0 || c.retrieval.final_k == 0) {
    throw ConfigError("config retrieval k values must be at least 1");
  }
  if (!(c.ordering.tau_meters > 0.0)) throw ConfigError("config spatial.tau_meters must be positive");
  if (c.n_candidates == 0) throw ConfigError("config spatial.n_candidates must be at least 1");
  if (c.ordering.exact_max_n < 2 || c.ordering.exact_max_n > 24) {
    throw ConfigError("config spatial.exact_solver_max_n must be in [2, 24]");
  }
  try {
    c.ordering.sa.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config sa: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw ConfigError("config service.port out of range");
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

std::string render_config(const Config& config) {
  std::string out;
  std::string section;
  for (const auto& [key, value] : config_entries(config)) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

Config load_config_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config: " + std::string(e.what()));
  }
  Config config;
  const auto base = path.parent_path();
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError("config key '" + section + "' outside a section");
    }
    for (const auto& [name, node] : entries) {
      const std::string key = section + "." + name;
      std::string value = node.get_value<std::string>();
      for (const char* pk : kPathKeys) {
        if (key == pk && !trim(value).empty()) {
          const std::filesystem::path p(trim(value));
          if (p.is_relative()) value = (base / p).lexically_normal().string();
        }
      }
      set_config_value(config, key, value);
    }
  }
  validate_config(config);
  return config;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void apply_env(Config& config, const EnvLookup& env) {
  if (auto v = env("CITYWALK_API_KEY")) config.api_key = *v;
  if (auto v = env("CITYWALK_API_BASE")) config.api_base = *v;
  if (auto v = env("CITYWALK_LLM_MODE")) set_config_value(config, "llm.chat_mode", *v);
  for (const auto& f : fields()) {
    std::string name = "CITYWALK_";
    for (const char* p = f.key; *p; ++p) {
      if (*p == '.') {
        name += "__";
      } else {
        name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
      }
    }
    if (auto v = env(name)) f.set(config, f.key, *v);
  }
  validate_config(config);
}

Config load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  std::optional<std::filesystem::path> file = path;
  if (!file) {
    if (auto v = env("CITYWALK_CONFIG"); v && !v->empty()) file = *v;
  }
  Config config = file ? load_config_file(*file) : Config{};
  apply_env(config, env);
  return config;
}

bool overridable_per_request(const std::string& key) {
  for (const char* prefix : {"retrieval.", "spatial.", "sa.", "itinerary."}) {
    if (key.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

}  // namespace citywalk
