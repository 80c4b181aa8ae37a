#include "citywalk/ingest.hpp"

#include <algorithm>

#include "citywalk/decompose.hpp"
#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk {

using json = nlohmann::json;

std::vector<ExtractedPlace> parse_extraction(std::string_view reply) {
  const json arr = parse_json_array_reply(reply);
  std::vector<ExtractedPlace> out;
  for (const auto& item : arr) {
    ExtractedPlace p;
    if (item.is_string()) {
      p.name = trim(item.get<std::string>());
    } else if (item.is_object() && item.contains("name") && item.at("name").is_string()) {
      p.name = trim(item.at("name").get<std::string>());
      if (item.contains("location") && item.at("location").is_string()) {
        p.location = trim(item.at("location").get<std::string>());
      }
    } else {
      throw std::invalid_argument("extraction element without a name: " + item.dump());
    }
    if (p.name.empty()) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const ExtractedPlace& q) {
      return to_lower(q.name) == to_lower(p.name);
    });
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

IngestReport ingest_post(std::string_view post_text, std::string_view city, PoiStore& store,
                         LlmGateway& gateway, Geocoder& geocoder, const PromptLibrary& prompts,
                         const IngestOptions& options) {
  const std::string post = trim(post_text);
  if (post.empty()) throw std::invalid_argument("post text must not be empty");
  const std::string city_name = trim(city);
  IngestReport report;

  const std::string prompt = render_template(prompts.text(PromptId::extract_pois),
                                             {{"city", city_name}, {"post", post}});
  ChatRequest chat{prompt, 0.0, 1024, options.model_tag};
  std::vector<ExtractedPlace> places;
  try {
    try {
      places = parse_extraction(gateway.chat(chat));
    } catch (const GatewayError&) {
      throw;
    } catch (const std::exception& e) {
      chat.prompt = prompt + "\n\nYour previous reply could not be used (" + e.what() +
                    "). Reply again with only the JSON array.";
      try {
        places = parse_extraction(gateway.chat(chat));
      } catch (const GatewayError&) {
        throw;
      } catch (const std::exception&) {
        throw IngestError("unparseable extraction", report);
      }
    }
  } catch (const GatewayError& e) {
    throw IngestError(std::string("extraction failed: ") + e.what(), report);
  }

  for (const auto& place : places) {
    std::optional<GeocodeResult> hit;
    try {
      hit = geocoder.lookup(place.name, city_name);
    } catch (const GeocoderUnavailable& e) {
      throw IngestError(std::string("geocoder unreachable: ") + e.what(), report);
    }
    if (!hit) {
      report.skipped.push_back(place.name + ": not found by geocoder");
      continue;
    }

    try {
      const std::string describe = render_template(
          prompts.text(PromptId::poi_description),
          {{"name", hit->name}, {"city", city_name}, {"post", post}});
      const std::string description =
          trim(gateway.chat(ChatRequest{describe, 0.0, 512, options.model_tag}));

      Poi poi;
      poi.name = hit->name;
      poi.address = hit->address;
      poi.city = hit->city.empty() ? city_name : hit->city;
      poi.description = description;
      poi.location = hit->location;
      poi.rating = std::clamp(hit->rating, 0.0, 5.0);
      poi.category = hit->category;
      // A place already in the store is refreshed in place.
      for (const auto& [id, existing] : store.pois()) {
        if (to_lower(trim(existing.name)) == to_lower(trim(poi.name)) &&
            to_lower(trim(existing.address)) == to_lower(trim(poi.address)) &&
            to_lower(trim(existing.city)) == to_lower(trim(poi.city))) {
          poi.id = id;
          break;
        }
      }
      const PoiId id = store.upsert(poi);
      store.set_embedding(id, gateway.embed_model(), gateway.embed_one(store.at(id).context));
      if (std::find(report.stored.begin(), report.stored.end(), id) == report.stored.end()) {
        report.stored.push_back(id);
      }
    } catch (const GatewayError& e) {
      throw IngestError(std::string("gateway failure while ingesting '") + place.name +
                            "': " + e.what(),
                        report);
    }
  }
  return report;
}

IngestReport ingest_batch(const std::vector<PostInput>& posts, PoiStore& store,
                          LlmGateway& gateway, Geocoder& geocoder, const PromptLibrary& prompts,
                          const IngestOptions& options) {
  IngestReport total;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    try {
      auto r = ingest_post(posts[i].text, posts[i].city, store, gateway, geocoder, prompts, options);
      total.stored.insert(total.stored.end(), r.stored.begin(), r.stored.end());
      total.skipped.insert(total.skipped.end(), r.skipped.begin(), r.skipped.end());
    } catch (const IngestError& e) {
      const auto& p = e.partial();
      total.stored.insert(total.stored.end(), p.stored.begin(), p.stored.end());
      total.skipped.insert(total.skipped.end(), p.skipped.begin(), p.skipped.end());
      total.errors.push_back("post " + std::to_string(i) + ": " + e.what());
    } catch (const std::exception& e) {
      total.errors.push_back("post " + std::to_string(i) + ": " + e.what());
    }
  }
  return total;
}

}  // namespace citywalk
