#include <thread>

#include "citywalk/service.hpp"
#include "doctest.h"
#include "fake_llm.hpp"
#include "httplib.h"
#include "synthetic_city.hpp"

using namespace citywalk;
using json = nlohmann::json;

namespace {

std::shared_ptr<ServiceState> make_state(std::string admin_token = "") {
  auto state = std::make_shared<ServiceState>();
  state->config.admin_token = std::move(admin_token);
  state->config.max_body_bytes = 64 * 1024;
  state->config.ordering.sa.max_iters = 20000;
  state->store = SharedPoiStore(testing::riverton_store());
  testing::FakeLlmOptions o;
  o.known_names = testing::riverton_names();
  state->gateway = testing::live_gateway(std::make_shared<testing::FakeLlm>(o));
  state->geocoder = std::make_shared<FileGeocoder>(testing::riverton_geocoder_entries());
  return state;
}

// Service on an ephemeral port, served from a background thread.
class Running {
 public:
  explicit Running(std::shared_ptr<ServiceState> state) : service_(std::move(state)) {
    port_ = service_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { service_.listen_after_bind(); });
    service_.wait_until_ready();
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }

 private:
  Service service_;
  int port_ = -1;
  std::thread thread_;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("health and unknown routes") {
    Running server(make_state());
    auto c = server.client();
    auto r = c.Get("/healthz");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->body == "ok");
    r = c.Get("/v1/nothing");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r).at("code") == "not_found");
  }

  TEST_CASE("plan endpoint") {
    Running server(make_state());
    auto c = server.client();
    auto r = c.Post("/v1/plan", R"({"request": "Riverside walk with seafood", "city": "Riverton"})",
                    "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto j = body_of(r);
    CHECK(j.at("schema_version") == "1");
    CHECK(j.at("route_geojson").at("type") == "FeatureCollection");
    CHECK_FALSE(j.at("itinerary").at("poi_ids").empty());
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");

    r = c.Post("/v1/plan", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r).at("code") == "invalid_json");

    r = c.Post("/v1/plan", R"({"request": "", "city": "Riverton"})", "application/json");
    CHECK(r->status == 400);
    r = c.Post("/v1/plan", R"({"request": "parks", "city": "Atlantis"})", "application/json");
    CHECK(r->status == 404);
    CHECK(body_of(r).at("code") == "unknown_city");
    r = c.Post("/v1/plan", R"({"request": "parks", "city": "Riverton", "variant": "nope"})", "application/json");
    CHECK(r->status == 400);
    r = c.Post("/v1/plan", R"({"request": "parks", "city": "Riverton", "overrides": {"llm.api_key": "x"}})",
               "application/json");
    CHECK(r->status == 400);
  }

  TEST_CASE("oversized body") {
    Running server(make_state());
    auto c = server.client();
    const std::string big = R"({"request": ")" + std::string(70 * 1024, 'a') + R"(", "city": "Riverton"})";
    auto r = c.Post("/v1/plan", big, "application/json");
    REQUIRE(r);
    CHECK(r->status == 413);
  }

  TEST_CASE("gateway failure maps to 502") {
    auto state = make_state();
    state->gateway = testing::replay_gateway(std::make_shared<Cassette>());
    Service service(state);
    const auto reply = service.handle_plan(R"({"request": "parks", "city": "Riverton"})");
    CHECK(reply.status == 502);
    const auto j = json::parse(reply.body);
    CHECK(j.at("code") == "cassette_miss");
    CHECK(j.at("stage") == "decompose");
  }

  TEST_CASE("poi paging") {
    Running server(make_state());
    auto c = server.client();
    auto r = c.Get("/v1/pois?city=Riverton&page=2&page_size=12");
    REQUIRE(r);
    const auto j = body_of(r);
    CHECK(j.at("total") == 30);
    REQUIRE(j.at("pois").size() == 12);
    CHECK(j.at("pois")[0].at("id") == 13);
    r = c.Get("/v1/pois?page=3&page_size=12");
    CHECK(body_of(r).at("pois").size() == 6);
    r = c.Get("/v1/pois?page=0");
    CHECK(r->status == 400);
    r = c.Get("/v1/pois?page_size=501");
    CHECK(r->status == 400);
    r = c.Get("/v1/pois?city=Atlantis");
    CHECK(body_of(r).at("total") == 0);
  }

  TEST_CASE("ingest endpoint") {
    auto state = make_state();
    Running server(state);
    auto c = server.client();
    const json req{{"post_text", testing::riverton_post()}, {"city", "Riverton"}};
    auto r = c.Post("/v1/pois/ingest", req.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto j = body_of(r);
    CHECK(j.at("stored").size() == 2);
    CHECK(j.at("skipped").size() == 1);
    CHECK(state->store.snapshot()->size() == 32);
    r = c.Post("/v1/pois/ingest", R"({"post_text": "  ", "city": "Riverton"})", "application/json");
    CHECK(r->status == 400);
  }

  TEST_CASE("compare requires the admin token") {
    const std::string body =
        R"({"city": "Riverton", "generators": ["ip-greedy"], "dataset": [{"request": "art", "poi_ids": [13, 14]}]})";
    {
      Service closed(make_state());
      CHECK(closed.handle_compare(body, "Bearer x").status == 403);
    }
    Running server(make_state("s3cret"));
    auto c = server.client();
    auto r = c.Post("/v1/eval/compare", body, "application/json");
    REQUIRE(r);
    CHECK(r->status == 401);
    httplib::Headers auth{{"Authorization", "Bearer s3cret"}};
    r = c.Post("/v1/eval/compare", auth, body, "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto j = body_of(r);
    CHECK(j.at("summaries")[0].at("generator") == "ip-greedy");
    CHECK(j.at("rows").size() == 1);
    r = c.Post("/v1/eval/compare", auth, R"({"dataset": [{"request": "x", "poi_ids": [999]}]})",
               "application/json");
    CHECK(r->status == 400);
    r = c.Post("/v1/eval/compare", auth, R"({"dataset": []})", "application/json");
    CHECK(r->status == 400);
  }
}
