#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citywalk/decompose.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"
#include "json.hpp"

namespace citywalk {

/// Final plan. poi_ids is a non-empty subsequence of the ordered candidate
/// list and est_duration_hours is positive.
struct Itinerary {
  std::vector<PoiId> poi_ids;
  std::string narrative;
  double est_duration_hours = 0.0;
  std::string request;

  friend bool operator==(const Itinerary&, const Itinerary&) = default;
};

inline constexpr double kMinHours = 1.0;
inline constexpr double kMaxHours = 14.0;
inline constexpr double kDefaultHours = 6.0;

struct TimeBudget {
  double hours = kDefaultHours;
  std::vector<std::string> warnings;
};

/// Reads {"hours": N} (or the first number in the text). Non-positive or
/// absent values yield nullopt.
std::optional<double> parse_hours(std::string_view reply);

TimeBudget estimate_time_budget(std::string_view request, LlmGateway& gateway,
                                const PromptLibrary& prompts,
                                const std::string& model_tag = "fast");

/// "3. [id=12] The Bund | site | 5.0 | Waterfront promenade ..."
std::string ig_candidate_line(std::size_t number, const Poi& poi);

/// One line per subrequest, e.g. "- POI: likes \"bridges\"; must-see".
std::string describe_preferences(const Decomposition& decomposition);

/// Deterministic instantiation of the itinerary template. With
/// `allow_reorder` the model is told it may choose its own visiting order.
std::string build_ig_prompt(std::string_view request, const Decomposition& decomposition,
                            std::span<const Poi> ordered_pois, double hours,
                            std::string_view style, const PromptLibrary& prompts,
                            bool allow_reorder = false);

struct SelectionRepair {
  std::vector<PoiId> ids;
  std::vector<std::string> warnings;
};

/// Keeps integer ids present in `order`, drops duplicates, and (unless
/// `allow_reorder`) restores the relative order of `order`. Total: never
/// throws on any JSON value.
SelectionRepair repair_selection(const nlohmann::json& selected, std::span<const PoiId> order,
                                 bool allow_reorder = false);

struct GenerateOptions {
  std::string model_tag = "strong";
  double temperature = 0.7;
  int max_tokens = 2048;
  std::size_t fallback_length = 6;
  bool allow_reorder = false;
};

struct Generation {
  Itinerary itinerary;
  std::vector<std::string> warnings;
  bool fallback = false;
};

/// Parses the model's {"selected_ids", "narrative"} reply, reprompting once
/// when it cannot be read, and repairs it into a valid Itinerary. An empty
/// selection falls back to the first min(fallback_length, n) POIs. Gateway
/// failures propagate.
Generation generate(std::string_view request, const Decomposition& decomposition,
                    std::span<const Poi> ordered_pois, double hours, std::string_view style,
                    LlmGateway& gateway, const PromptLibrary& prompts,
                    const GenerateOptions& options = {});

/// Stop-by-stop narrative used when the model's text is missing.
std::string template_narrative(std::span<const PoiId> ids, std::span<const Poi> pois);

/// Checks the Itinerary invariants against the ordered candidate ids.
bool itinerary_valid(const Itinerary& itinerary, std::span<const PoiId> order,
                     bool require_order = true);

}  // namespace citywalk
