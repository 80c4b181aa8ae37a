#include "synthetic_city.hpp"

#include <cmath>

#include "citywalk/llm_gateway.hpp"
#include "citywalk/random.hpp"

namespace citywalk::testing {

namespace {

constexpr double kLon = 121.47;
constexpr double kLat = 31.23;

struct Seed {
  const char* name;
  Category category;
  double rating;
  const char* description;
};

struct Quarter {
  const char* street;
  double east_m;
  double north_m;
  Seed pois[6];
};

const Quarter kQuarters[] = {
    {"Old Town Road", 0, 0,
     {{"Jade Buddha Temple", Category::site, 4.7,
       "Quiet Buddhist temple with carved jade statues and incense-filled courtyards; history and architecture."},
      {"Old Town Tea House", Category::restaurant, 4.4,
       "Wooden tea house on a pond serving green tea and dumplings; traditional and calm."},
      {"City God Bazaar", Category::shop, 3.9,
       "Narrow lanes of souvenir stalls, crafts and snacks; busy and crowded shopping."},
      {"Lantern Lane", Category::site, 4.5,
       "Old lane houses hung with red lanterns; history, photography and local life."},
      {"Heritage Museum", Category::site, 4.6,
       "Museum of city history with maps, ceramics and old photographs."},
      {"Dumpling House", Category::restaurant, 4.3,
       "Famous soup dumplings in a crowded dining hall; local food."}}},
    {"River Road", 2000, 0,
     {{"Riverside Promenade", Category::nature, 4.8,
       "Long riverfront walk with skyline views, best at night."},
      {"Iron Bridge", Category::site, 4.5,
       "Historic steel bridge across the river; views and photography."},
      {"Harbor Lights Bar", Category::entertainment, 4.2,
       "Rooftop bar with river views and cocktails; nightlife."},
      {"Customs House", Category::site, 4.3,
       "Colonial era architecture with a clock tower on the river; history."},
      {"Ferry Pier", Category::site, 4.0,
       "Cross-river ferry with cheap rides and views of the skyline."},
      {"Seafood Wharf", Category::restaurant, 4.1,
       "Fresh seafood restaurant by the river; dinner."}}},
    {"Mill Street", 0, 2000,
     {{"Red Brick Gallery", Category::site, 4.6,
       "Contemporary art gallery in a converted warehouse; art and exhibitions."},
      {"Studio Lane", Category::site, 4.4,
       "Artist studios and small galleries in old factory buildings; art and design."},
      {"Drip Coffee Roasters", Category::restaurant, 4.7,
       "Specialty coffee shop with pour-over and pastries; quiet mornings."},
      {"Poster Art Museum", Category::site, 4.5,
       "Small museum of vintage propaganda posters; art and history."},
      {"Vinyl Corner", Category::shop, 4.2,
       "Record shop with vinyl, books and music."},
      {"Warehouse Theater", Category::entertainment, 4.3,
       "Experimental theater and live music in a warehouse; evening shows."}}},
    {"Market Street", -1800, -1200,
     {{"Central Food Market", Category::restaurant, 4.4,
       "Covered market with street food stalls, noodles and fruit; crowded local food."},
      {"Noodle Alley", Category::restaurant, 4.5,
       "Hand-pulled noodle shops on a narrow alley; cheap local food."},
      {"Silk Street Mall", Category::shop, 3.8,
       "Large shopping mall with fashion and silk; crowded shopping."},
      {"Spice Bazaar", Category::shop, 4.1,
       "Stalls of spices, dried goods and tea; local market."},
      {"Night Market", Category::entertainment, 4.3,
       "Evening street food and games; nightlife, crowded."},
      {"Bakery Republic", Category::restaurant, 4.6,
       "French bakery and cafe with croissants and coffee; breakfast."}}},
    {"Hill Road", 1600, -1800,
     {{"Green Hill Park", Category::nature, 4.7,
       "Large park with lawns, a lake and morning tai chi; quiet nature."},
      {"Botanical Garden", Category::nature, 4.6,
       "Greenhouses and gardens of orchids and bamboo; nature and flowers."},
      {"Lakeside Pavilion", Category::site, 4.2,
       "Pavilion on the lake with rowing boats; relaxing views."},
      {"Science Museum", Category::site, 4.4,
       "Interactive science museum for families and kids; exhibitions."},
      {"Hilltop Observatory", Category::site, 4.5,
       "Observation deck with city views at sunset."},
      {"Garden Cafe", Category::restaurant, 4.0,
       "Cafe in the park serving coffee and light lunch; quiet."}}},
};

GeoPoint offset(double east_m, double north_m) {
  constexpr double deg = 111320.0;
  constexpr double pi = 3.14159265358979323846;
  return GeoPoint(kLon + east_m / (deg * std::cos(kLat * pi / 180.0)), kLat + north_m / deg);
}

}  // namespace

std::vector<Poi> riverton_pois() {
  Rng rng(7);
  std::vector<Poi> out;
  PoiId id = 1;
  for (const auto& q : kQuarters) {
    int number = 10;
    for (const auto& s : q.pois) {
      const double r = 350.0 * std::sqrt(rng.uniform01());
      const double a = 2.0 * 3.14159265358979323846 * rng.uniform01();
      Poi p;
      p.id = id++;
      p.name = s.name;
      p.address = std::to_string(number) + " " + q.street;
      number += 12;
      p.city = kCity;
      p.description = s.description;
      p.location = offset(q.east_m + r * std::cos(a), q.north_m + r * std::sin(a));
      p.rating = s.rating;
      p.category = s.category;
      out.push_back(std::move(p));
    }
  }
  return out;
}

PoiStore riverton_store() {
  PoiStore store;
  for (auto& p : riverton_pois()) store.upsert(std::move(p));
  for (const auto& [id, poi] : store.pois()) store.set_embedding(id, "stub-256", stub_embed(poi.context));
  return store;
}

std::vector<GroundTruthItinerary> riverton_ground_truth() {
  return {
      {"A half day of art galleries and coffee, no crowded shopping", {15, 13, 14, 16}},
      {"Start at Drip Coffee Roasters, then galleries and live music", {15, 13, 14, 18}},
      {"Old lane houses, temples and local history", {4, 1, 5, 2}},
      {"Riverside views at night and a cocktail bar", {8, 7, 11, 9}},
      {"Street food and noodles, avoid malls", {19, 20, 22, 23}},
      {"A quiet morning in parks and gardens", {30, 25, 26, 27}},
      {"Museums and history for a rainy 5-hour day", {5, 1, 16, 28}},
      {"Must see Iron Bridge, river views and seafood dinner", {10, 8, 7, 12}},
      {"Family day with the science museum and a park", {28, 25, 27, 29}},
      {"Local markets, spices and tea", {22, 19, 3, 2}},
      {"Architecture and photography along the river", {10, 8, 11, 4}},
      {"Coffee, bakery and a relaxing lake", {24, 15, 27, 30}},
      {"A full day mixing art, food and nightlife", {13, 14, 19, 20, 23, 9}},
      {"Visit Heritage Museum and traditional tea", {5, 2, 1, 4}},
      {"Vintage posters, records and theater", {16, 17, 18, 13}},
      {"Sunset views and a calm walk in nature", {25, 26, 29, 7}},
      {"Dumplings and temples, no crowded bazaar", {6, 1, 2, 4}},
      {"End at Harbor Lights Bar, river walk and ferry", {7, 11, 8, 9}},
      {"Cheap local food and the night market", {20, 19, 6, 23}},
      {"Flowers, orchids and bamboo gardens, 3 hours", {26, 25, 30}},
  };
}

std::vector<GeocodeResult> riverton_geocoder_entries() {
  std::vector<GeocodeResult> out;
  for (const auto& p : riverton_pois()) {
    out.push_back({p.name, p.address, p.city, p.location, p.rating, p.category});
  }
  out.push_back({"Moon Bridge Noodles", "3 Canal Street", kCity, offset(250, 300), 4.4,
                 Category::restaurant});
  out.push_back({"Canal Bookshop", "15 Canal Street", kCity, offset(320, 180), 4.6, Category::shop});
  return out;
}

std::string riverton_post() {
  return "Lazy Sunday in Riverton. We had lunch at \"Moon Bridge Noodles\" right by the canal, "
         "then lost an hour in \"Canal Bookshop\". Friends swore by \"Sky Whale Lounge\" but we "
         "never found it.";
}

std::vector<std::string> riverton_names() {
  std::vector<std::string> out;
  for (const auto& q : kQuarters) {
    for (const auto& s : q.pois) out.push_back(s.name);
  }
  return out;
}

}  // namespace citywalk::testing
