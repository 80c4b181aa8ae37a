#include <filesystem>
#include <fstream>
#include <random>

#include "citywalk/errors.hpp"
#include "citywalk/poi_store.hpp"
#include "doctest.h"
#include "synthetic_city.hpp"

using namespace citywalk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("citywalk_test_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  return dir / name;
}

Poi sample(std::string name, std::string address = "1 Main St") {
  Poi p;
  p.name = std::move(name);
  p.address = std::move(address);
  p.city = "Riverton";
  p.description = "A place.";
  p.location = GeoPoint(121.47, 31.23);
  p.rating = 4.5;
  p.category = Category::site;
  return p;
}

}  // namespace

TEST_SUITE("poi_store") {
  TEST_CASE("categories round-trip") {
    for (auto c : {Category::site, Category::restaurant, Category::entertainment, Category::shop,
                   Category::nature, Category::other}) {
      CHECK(parse_category(to_string(c)) == c);
    }
    CHECK_FALSE(parse_category("spaceport").has_value());
  }

  TEST_CASE("context line") {
    CHECK(make_context(sample("Iron Bridge")) ==
          "Iron Bridge; 1 Main St; Riverton; A place.; rating: 4.5; category: site");
  }

  TEST_CASE("upsert assigns ids and rejects duplicates") {
    PoiStore store;
    const auto a = store.upsert(sample("A"));
    const auto b = store.upsert(sample("B"));
    CHECK(a == 1);
    CHECK(b == 2);
    CHECK(store.at(a).context == make_context(store.at(a)));
    CHECK_THROWS_AS(store.upsert(sample("a")), StoreError);
    CHECK_NOTHROW(store.upsert(sample("A"), true));
    CHECK(store.size() == 3);
    CHECK(store.find_by_name("b")->id == b);
    CHECK(store.find(99) == nullptr);
    CHECK_THROWS(store.at(99));
  }

  TEST_CASE("replacing a POI drops its embeddings") {
    PoiStore store;
    const auto id = store.upsert(sample("A"));
    store.set_embedding(id, "m", {1.0, 0.0});
    CHECK(store.embedding(id, "m") != nullptr);
    auto p = store.at(id);
    p.description = "Changed.";
    store.upsert(p);
    CHECK(store.embedding(id, "m") == nullptr);
    CHECK(store.missing_embeddings("m") == std::vector<PoiId>{id});
  }

  TEST_CASE("embedding dimension is fixed on first use") {
    PoiStore store;
    const auto a = store.upsert(sample("A"));
    const auto b = store.upsert(sample("B"));
    store.set_embedding(a, "m", {1.0, 0.0});
    CHECK_THROWS(store.set_embedding(b, "m", {1.0, 0.0, 0.0}));
    CHECK_THROWS_AS(store.embeddings_matrix("m"), StoreError);
    store.set_embedding(b, "m", {0.0, 1.0});
    const auto m = store.embeddings_matrix("m");
    CHECK(m.ids == std::vector<PoiId>{a, b});
    CHECK(m.row(1)[1] == 1.0);
  }

  TEST_CASE("save and load round-trip with embeddings") {
    auto store = testing::riverton_store();
    const auto path = scratch("pois.jsonl");
    store.save(path);
    CHECK(fs::exists(embedding_sidecar_path(path)));
    const auto loaded = PoiStore::load(path);
    CHECK(loaded == store);
  }

  TEST_CASE("malformed file names the line") {
    const auto path = scratch("bad.jsonl");
    std::ofstream(path) << R"({"id": 1, "name": "A", "address": "", "city": "X", "description": "",)"
                        << R"( "longitude": 1, "latitude": 2, "rating": 4, "category": "site"})" << "\n"
                        << "{not json\n";
    try {
      PoiStore::load(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
    }
  }

  TEST_CASE("city subsets and listing") {
    PoiStore store;
    store.upsert(sample("A"));
    auto other = sample("B");
    other.city = "Lakeside";
    store.upsert(other);
    CHECK(store.cities() == std::vector<std::string>{"Lakeside", "Riverton"});
    CHECK(store.subset_city("riverton").size() == 1);
    CHECK(store.subset_city("nowhere").empty());
  }

  TEST_CASE("ground truth round-trip and validation") {
    const auto records = testing::riverton_ground_truth();
    const auto path = scratch("truth.tsv");
    save_ground_truth(path, records);
    CHECK(load_ground_truth(path) == records);
    const auto store = testing::riverton_store();
    CHECK_NOTHROW(validate_ground_truth(records, store));
    std::vector<GroundTruthItinerary> bad{{"x", {1, 999}}};
    CHECK_THROWS_AS(validate_ground_truth(bad, store), StoreError);
  }

  TEST_CASE("shared store readers keep their snapshot") {
    SharedPoiStore shared;
    const auto before = shared.snapshot();
    shared.mutate([](PoiStore& s) { s.upsert(sample("A")); });
    CHECK(before->empty());
    CHECK(shared.snapshot()->size() == 1);
  }
}
