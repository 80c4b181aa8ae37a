#include "citywalk/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "citywalk/retrieval.hpp"
#include "citywalk/spatial.hpp"
#include "citywalk/text.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

class StageClock {
 public:
  explicit StageClock(PlanResponse& out) : out_(out) {}

  template <typename Fn>
  auto run(const char* stage, Fn&& fn) {
    const auto begin = std::chrono::steady_clock::now();
    const auto record = [&] {
      const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - begin;
      out_.timings_ms.emplace_back(stage, ms.count());
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  }

 private:
  PlanResponse& out_;
};

json partial(const PlanResponse& r) {
  json j = json::object();
  j["warnings"] = r.warnings;
  if (!r.subrequests.subrequests.empty()) j["subrequests"] = to_json(r.subrequests);
  if (!r.ordered_pois.empty()) {
    json ids = json::array();
    for (const auto& p : r.ordered_pois) ids.push_back(p.id);
    j["ordered_ids"] = ids;
  }
  return j;
}

std::string code_for(const std::exception& e) {
  if (dynamic_cast<const CassetteMiss*>(&e)) return "cassette_miss";
  if (dynamic_cast<const GatewayError*>(&e)) return "gateway_error";
  if (dynamic_cast<const DecompositionError*>(&e)) return "decomposition_failed";
  if (dynamic_cast<const StoreError*>(&e)) return "store_error";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_input";
  return "internal";
}

template <typename Fn>
auto guarded(const char* stage, PlanResponse& out, Fn&& fn) {
  try {
    return fn();
  } catch (const PlanError&) {
    throw;
  } catch (const std::exception& e) {
    throw PlanError(code_for(e), stage, e.what(), partial(out));
  }
}

json geometry_point(const GeoPoint& p) {
  return json{{"type", "Point"}, {"coordinates", json::array({p.longitude(), p.latitude()})}};
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::full: return "full";
    case Variant::no_rd: return "no-rd";
    case Variant::no_ppr: return "no-ppr";
    case Variant::no_cso: return "no-cso";
  }
  return "full";
}

std::optional<Variant> parse_variant(std::string_view text) {
  std::string t = to_lower(trim(text));
  std::replace(t.begin(), t.end(), '_', '-');
  if (t == "full") return Variant::full;
  if (t == "no-rd") return Variant::no_rd;
  if (t == "no-ppr") return Variant::no_ppr;
  if (t == "no-cso") return Variant::no_cso;
  return std::nullopt;
}

json PlanError::to_json() const {
  return json{{"code", code_}, {"stage", stage_}, {"message", what()}, {"diagnostics", diagnostics_}};
}

PoiSummary summarize(const Poi& poi) {
  return PoiSummary{poi.id, poi.name, poi.category, poi.rating, poi.location};
}

PlanResponse plan(const PlanRequest& request, const PoiStore& full_store, LlmGateway& gateway,
                  const PromptLibrary& prompts, const Config& base_config, Variant variant) {
  PlanResponse out;
  out.request = trim(request.request);
  out.city = trim(request.city);
  out.variant = variant;
  if (out.request.empty()) throw PlanError("invalid_request", "validate", "request must not be empty");

  Config config = base_config;
  for (const auto& [key, value] : request.overrides) {
    if (!overridable_per_request(key)) {
      throw PlanError("invalid_request", "validate", "config key '" + key + "' cannot be overridden");
    }
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw PlanError("invalid_request", "validate", e.what());
    }
  }
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    throw PlanError("invalid_request", "validate", e.what());
  }
  config.ordering.model_tag = config.fast_model;
  config.generate.model_tag = config.strong_model;
  config.generate.allow_reorder = variant == Variant::no_cso;
  out.sa_seed = config.ordering.sa.seed;

  const PoiStore store = out.city.empty() ? full_store : full_store.subset_city(out.city);
  if (store.empty()) {
    throw PlanError("unknown_city", "validate", "no POIs stored for city '" + out.city + "'");
  }
  StageClock clock(out);

  // Request decomposition.
  out.subrequests = guarded("decompose", out, [&] {
    return clock.run("decompose", [&] {
      if (variant == Variant::no_rd) {
        Decomposition d;
        d.raw_request = out.request;
        d.subrequests.push_back({out.request, "", false, SubRequestType::itinerary});
        return d;
      }
      DecomposeOptions opts;
      opts.model_tag = config.fast_model;
      auto v = decompose(out.request, gateway, prompts, opts);
      for (const auto& r : v.report) out.warnings.push_back("decompose: " + r);
      return v.decomposition;
    });
  });

  // Retrieval.
  const std::vector<ScoredPoi> retrieved = guarded("retrieve", out, [&] {
    return clock.run("retrieve", [&] {
      if (variant == Variant::no_ppr) {
        std::vector<ScoredPoi> by_rating;
        for (const auto& [id, poi] : store.pois()) by_rating.push_back({id, poi.rating});
        sort_ranked(by_rating);
        if (by_rating.size() > config.retrieval.final_k) by_rating.resize(config.retrieval.final_k);
        return by_rating;
      }
      auto r = retrieve(out.subrequests, store, gateway, config.retrieval);
      for (const auto& w : r.warnings) out.warnings.push_back("retrieve: " + w);
      return r.candidates;
    });
  });
  if (retrieved.empty()) {
    throw PlanError("no_candidates", "retrieve", "retrieval returned no POIs", partial(out));
  }

  // Clustering, candidate selection and ordering.
  std::vector<PoiId> order;
  if (variant == Variant::no_cso) {
    clock.run("cluster", [&] {
      for (std::size_t i = 0; i < retrieved.size() && i < config.n_candidates; ++i) {
        order.push_back(retrieved[i].poi_id);
      }
    });
  } else {
    const auto selection = guarded("cluster", out, [&] {
      return clock.run("cluster", [&] {
        std::vector<ScoredPlace> places;
        for (const auto& s : retrieved) places.push_back({s.poi_id, store.at(s.poi_id).location, s.score});
        return cluster_and_select(places, config.ordering.tau_meters, config.n_candidates);
      });
    });
    const auto ordering = guarded("order", out, [&] {
      return clock.run("order", [&] {
        return order_pois(selection.clusters, selection.candidates, store, out.subrequests,
                          &gateway, prompts, config.ordering);
      });
    });
    order = ordering.order;
    out.cluster_blocks = ordering.blocks;
    out.start_id = ordering.start.id;
    out.start_source = ordering.start.source;
    for (const auto& w : ordering.start.warnings) out.warnings.push_back("order: " + w);
  }
  std::vector<Poi> ordered_pois;
  for (PoiId id : order) {
    ordered_pois.push_back(store.at(id));
    out.ordered_pois.push_back(summarize(store.at(id)));
  }

  const auto budget = guarded("budget", out, [&] {
    return clock.run("budget", [&] {
      return estimate_time_budget(out.request, gateway, prompts, config.fast_model);
    });
  });
  for (const auto& w : budget.warnings) out.warnings.push_back("budget: " + w);

  const auto generation = guarded("generate", out, [&] {
    return clock.run("generate", [&] {
      return generate(out.request, out.subrequests, ordered_pois, budget.hours, request.style,
                      gateway, prompts, config.generate);
    });
  });
  for (const auto& w : generation.warnings) out.warnings.push_back("generate: " + w);
  out.itinerary = generation.itinerary;
  for (PoiId id : out.itinerary.poi_ids) out.itinerary_pois.push_back(summarize(store.at(id)));
  out.route_geojson = route_geojson(out.itinerary_pois);

  double total = 0.0;
  for (const auto& [stage, ms] : out.timings_ms) total += ms;
  out.timings_ms.emplace_back("total", total);
  return out;
}

json route_geojson(std::span<const PoiSummary> visit_order) {
  json features = json::array();
  json line = json::array();
  std::vector<GeoPoint> points;
  for (std::size_t i = 0; i < visit_order.size(); ++i) {
    const auto& p = visit_order[i];
    features.push_back(json{{"type", "Feature"},
                            {"geometry", geometry_point(p.location)},
                            {"properties",
                             {{"id", p.id},
                              {"name", p.name},
                              {"order", i + 1},
                              {"category", std::string(to_string(p.category))},
                              {"rating", p.rating}}}});
    line.push_back(json::array({p.location.longitude(), p.location.latitude()}));
    points.push_back(p.location);
  }
  if (visit_order.size() >= 2) {
    features.push_back(json{{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", line}}},
                            {"properties", {{"kind", "route"}, {"length_m", path_length(points)}}}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}};
}

json to_json(const PlanResponse& r, bool include_timings) {
  const auto summary = [](const PoiSummary& p) {
    return json{{"id", p.id},
                {"name", p.name},
                {"category", std::string(to_string(p.category))},
                {"rating", p.rating},
                {"longitude", p.location.longitude()},
                {"latitude", p.location.latitude()}};
  };
  json ordered = json::array();
  for (const auto& p : r.ordered_pois) ordered.push_back(summary(p));
  json visit = json::array();
  for (const auto& p : r.itinerary_pois) visit.push_back(summary(p));

  json diagnostics{{"warnings", r.warnings},
                   {"seeds", {{"sa", r.sa_seed}}},
                   {"cluster_blocks", r.cluster_blocks},
                   {"start", {{"id", r.start_id}, {"source", r.start_source}}}};
  if (include_timings) {
    json t = json::object();
    for (const auto& [stage, ms] : r.timings_ms) t[stage] = ms;
    diagnostics["timings_ms"] = t;
  }
  return json{{"schema_version", kPlanSchemaVersion},
              {"request", r.request},
              {"city", r.city},
              {"variant", std::string(to_string(r.variant))},
              {"itinerary",
               {{"poi_ids", r.itinerary.poi_ids},
                {"narrative", r.itinerary.narrative},
                {"est_duration_hours", r.itinerary.est_duration_hours},
                {"request", r.itinerary.request},
                {"pois", visit}}},
              {"ordered_pois", ordered},
              {"subrequests", to_json(r.subrequests)},
              {"route_geojson", r.route_geojson},
              {"diagnostics", diagnostics}};
}

std::string render_text(const PlanResponse& r) {
  std::string out = "Itinerary for: " + r.request + "\n";
  char hours[32];
  std::snprintf(hours, sizeof hours, "%.1f", r.itinerary.est_duration_hours);
  out += "Estimated duration: " + std::string(hours) + " h\n\n";
  for (std::size_t i = 0; i < r.itinerary_pois.size(); ++i) {
    const auto& p = r.itinerary_pois[i];
    out += std::to_string(i + 1) + ". " + p.name + " (" + std::string(to_string(p.category)) +
           ", id " + std::to_string(p.id) + ")\n";
  }
  out += "\n" + r.itinerary.narrative + "\n";
  if (!r.warnings.empty()) {
    out += "\nWarnings:\n";
    for (const auto& w : r.warnings) out += "- " + w + "\n";
  }
  return out;
}

}  // namespace citywalk
