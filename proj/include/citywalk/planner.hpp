#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citywalk/config.hpp"
#include "citywalk/decompose.hpp"
#include "citywalk/errors.hpp"
#include "citywalk/itinerary.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"
#include "json.hpp"

namespace citywalk {

inline constexpr const char* kPlanSchemaVersion = "1";

/// Pipeline variants used by the ablation study.
///   no_rd:  the raw request is one itinerary-level subrequest.
///   no_ppr: candidates are the best-rated POIs, ignoring preferences.
///   no_cso: no clustering or route optimization; the LLM orders the POIs.
enum class Variant { full, no_rd, no_ppr, no_cso };

std::string_view to_string(Variant variant);
/// Accepts "full", "no-rd", "no-ppr", "no-cso" (underscores too).
std::optional<Variant> parse_variant(std::string_view text);

struct PlanRequest {
  std::string request;
  std::string city;
  std::string style;
  std::map<std::string, std::string> overrides;  // "section.key" -> value
};

struct PoiSummary {
  PoiId id = 0;
  std::string name;
  Category category = Category::other;
  double rating = 0.0;
  GeoPoint location{0.0, 0.0};
};

struct PlanResponse {
  std::string request;
  std::string city;
  Variant variant = Variant::full;
  Itinerary itinerary;
  std::vector<PoiSummary> itinerary_pois;  // visit order
  std::vector<PoiSummary> ordered_pois;    // the ordered candidate list
  std::vector<std::vector<PoiId>> cluster_blocks;
  Decomposition subrequests;
  nlohmann::json route_geojson;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings_ms;
  std::uint64_t sa_seed = 0;
  PoiId start_id = 0;
  std::string start_source;
};

/// Stage failure. `code` is a stable machine token, `stage` names the
/// pipeline step, `diagnostics` carries whatever was produced before it.
class PlanError : public Error {
 public:
  PlanError(std::string code, std::string stage, const std::string& message,
            nlohmann::json diagnostics = nlohmann::json::object())
      : Error(message),
        code_(std::move(code)),
        stage_(std::move(stage)),
        diagnostics_(std::move(diagnostics)) {}

  const std::string& code() const { return code_; }
  const std::string& stage() const { return stage_; }
  const nlohmann::json& diagnostics() const { return diagnostics_; }
  nlohmann::json to_json() const;

 private:
  std::string code_;
  std::string stage_;
  nlohmann::json diagnostics_;
};

/// decompose -> retrieve -> cluster -> order -> budget -> generate over the
/// POIs of `request.city` (all POIs when the city is empty).
PlanResponse plan(const PlanRequest& request, const PoiStore& store, LlmGateway& gateway,
                  const PromptLibrary& prompts, const Config& config,
                  Variant variant = Variant::full);

/// FeatureCollection with one Point per POI (properties id, name, order
/// starting at 1, category, rating) and, for two or more POIs, a LineString
/// through them in order.
nlohmann::json route_geojson(std::span<const PoiSummary> visit_order);

/// Canonical response document. Timings are included only on request so
/// replayed plans serialize byte-identically.
nlohmann::json to_json(const PlanResponse& response, bool include_timings);

/// Human-readable itinerary.
std::string render_text(const PlanResponse& response);

PoiSummary summarize(const Poi& poi);

}  // namespace citywalk
