#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citywalk/geo.hpp"
#include "citywalk/geocoder.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"
#include "citywalk/spatial.hpp"

namespace citywalk {

/// |generated ∩ truth| / |truth| over id sets. Throws on empty truth.
double recall_rate(std::span<const PoiId> generated, std::span<const PoiId> truth);

inline constexpr std::size_t kExactMarginMaxN = 15;

struct MarginResult {
  double meters_per_poi = 0.0;
  double route_m = 0.0;
  double optimal_m = 0.0;
  bool approximate = false;  // reference path found by annealing, not exactly
};

/// Excess length per POI of the visit order 0..n-1 of `d` over the shortest
/// open path through the same points (free endpoints). Exact up to
/// kExactMarginMaxN points, best of `sa_seeds` annealing runs beyond.
MarginResult average_margin(const DistanceMatrix& d, const SAParams& sa = {},
                            std::size_t sa_seeds = 10);
/// Same, over stored POIs in the given visit order.
MarginResult average_margin(std::span<const PoiId> ids, const PoiStore& store,
                            const SAParams& sa = {}, std::size_t sa_seeds = 10);

/// Self-intersections of the route through the POIs in visit order.
std::size_t overlaps(std::span<const PoiId> ids, const PoiStore& store);

/// Fraction of names with no map-service entry scoring at least `threshold`
/// on the token-set ratio. Throws GeocoderUnavailable when unreachable.
double fail_rate(std::span<const std::string> names, Geocoder& geocoder, std::string_view city,
                 int threshold = 80);

struct JudgeVerdict {
  int pq = 0;  // 1: first shown wins, 2: second wins, 0: tie
  int iq = 0;
  int match = 0;
};

/// Reads {"PQ": v, "IQ": v, "Match": v} with v in {0, 1, 2}.
std::optional<JudgeVerdict> parse_verdict(std::string_view reply);

struct JudgeResult {
  double pq = 0.0;  // win rate of itinerary A, ties count one half
  double iq = 0.0;
  double match = 0.0;
  std::size_t trials = 0;
  std::size_t discarded = 0;
  std::uint64_t seed = 0;
};

struct JudgeOptions {
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string model_tag = "strong";
};

/// Pairwise comparison repeated `trials` times with the presentation order
/// drawn per trial. Unreadable verdicts are discarded and redrawn, up to
/// 2 * trials attempts in total. Throws std::invalid_argument for fewer
/// than 10 trials and Error when no verdict could be read.
JudgeResult llm_judge(std::string_view itinerary_a, std::string_view itinerary_b,
                      std::string_view request, LlmGateway& gateway,
                      const PromptLibrary& prompts, const JudgeOptions& options = {});

}  // namespace citywalk
