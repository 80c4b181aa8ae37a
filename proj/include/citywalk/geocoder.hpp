#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citywalk/errors.hpp"
#include "citywalk/geo.hpp"
#include "citywalk/poi_store.hpp"

namespace citywalk {

/// Map-service record for one place.
struct GeocodeResult {
  std::string name;
  std::string address;
  std::string city;
  GeoPoint location{0.0, 0.0};
  double rating = 0.0;
  Category category = Category::other;
};

/// The map service could not be reached; distinct from "no such place".
class GeocoderUnavailable : public Error {
 public:
  using Error::Error;
};

class Geocoder {
 public:
  virtual ~Geocoder() = default;
  /// Best match for `name` in `city`, or nullopt when nothing matches.
  virtual std::optional<GeocodeResult> lookup(std::string_view name, std::string_view city) = 0;
  /// Candidate entries for `name` in `city`, best first.
  virtual std::vector<GeocodeResult> search(std::string_view name, std::string_view city) = 0;
};

/// Offline geocoder over a fixed list of places, matched by token-set fuzzy
/// ratio. Reads the POI file format; `id` and `description` are optional.
class FileGeocoder : public Geocoder {
 public:
  explicit FileGeocoder(std::vector<GeocodeResult> entries, int threshold = 80);
  static FileGeocoder load(const std::filesystem::path& path, int threshold = 80);
  static FileGeocoder from_store(const PoiStore& store, int threshold = 80);

  std::optional<GeocodeResult> lookup(std::string_view name, std::string_view city) override;
  std::vector<GeocodeResult> search(std::string_view name, std::string_view city) override;

  /// Simulates an outage: every call throws GeocoderUnavailable.
  void set_available(bool available) { available_ = available; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<GeocodeResult> entries_;
  int threshold_;
  bool available_ = true;
};

}  // namespace citywalk
