#include "citywalk/geocoder.hpp"

#include <algorithm>
#include <fstream>

#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk {

using json = nlohmann::json;

FileGeocoder::FileGeocoder(std::vector<GeocodeResult> entries, int threshold)
    : entries_(std::move(entries)), threshold_(threshold) {}

FileGeocoder FileGeocoder::load(const std::filesystem::path& path, int threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open geocoder file: " + path.string());
  std::vector<GeocodeResult> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      GeocodeResult r;
      r.name = j.at("name").get<std::string>();
      r.address = j.value("address", "");
      r.city = j.value("city", "");
      r.location = GeoPoint(j.at("longitude").get<double>(), j.at("latitude").get<double>());
      r.rating = j.value("rating", 0.0);
      if (auto c = parse_category(j.value("category", "other"))) r.category = *c;
      entries.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return FileGeocoder(std::move(entries), threshold);
}

FileGeocoder FileGeocoder::from_store(const PoiStore& store, int threshold) {
  std::vector<GeocodeResult> entries;
  for (const auto& [id, poi] : store.pois()) {
    entries.push_back({poi.name, poi.address, poi.city, poi.location, poi.rating, poi.category});
  }
  return FileGeocoder(std::move(entries), threshold);
}

std::vector<GeocodeResult> FileGeocoder::search(std::string_view name, std::string_view city) {
  if (!available_) throw GeocoderUnavailable("geocoder unavailable");
  const std::string wanted_city = to_lower(trim(city));
  std::vector<std::pair<int, std::size_t>> scored;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!wanted_city.empty() && to_lower(trim(entries_[i].city)) != wanted_city) continue;
    scored.emplace_back(token_set_ratio(name, entries_[i].name), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<GeocodeResult> out;
  for (std::size_t k = 0; k < scored.size() && k < 5; ++k) out.push_back(entries_[scored[k].second]);
  return out;
}

std::optional<GeocodeResult> FileGeocoder::lookup(std::string_view name, std::string_view city) {
  const auto hits = search(name, city);
  if (hits.empty() || token_set_ratio(name, hits.front().name) < threshold_) return std::nullopt;
  return hits.front();
}

}  // namespace citywalk
