#include "citywalk/decompose.hpp"
#include "doctest.h"
#include "fake_llm.hpp"

using namespace citywalk;
using json = nlohmann::json;

TEST_SUITE("decompose") {
  TEST_CASE("subrequest types parse") {
    CHECK(parse_subrequest_type("POI") == SubRequestType::poi);
    CHECK(parse_subrequest_type("poi") == SubRequestType::poi);
    CHECK(parse_subrequest_type("start") == SubRequestType::start);
    CHECK(to_string(SubRequestType::itinerary) == "itinerary");
    CHECK_FALSE(parse_subrequest_type("route").has_value());
  }

  TEST_CASE("valid input passes unchanged") {
    const auto raw = json::parse(R"([
      {"pos": "People's Square", "neg": "", "mustsee": true, "type": "start"},
      {"pos": "old lane houses", "neg": "", "mustsee": false, "type": "POI"},
      {"pos": "", "neg": "crowded shopping streets", "mustsee": false, "type": "itinerary"}])");
    const auto v = validate_subrequests(raw, "req");
    CHECK(v.report.empty());
    REQUIRE(v.decomposition.subrequests.size() == 3);
    CHECK(v.decomposition.subrequests[0] == SubRequest{"People's Square", "", true, SubRequestType::start});
    CHECK(v.decomposition.raw_request == "req");
  }

  TEST_CASE("repairs are reported") {
    const auto raw = json::parse(R"([
      {"pos": "", "neg": ""},
      {"pos": "a", "type": "sideways"},
      {"pos": "b", "mustsee": true, "type": "itinerary"},
      {"pos": "c", "type": "start"},
      {"pos": "d", "type": "start"},
      {"pos": "", "neg": "e", "mustsee": true, "type": "POI"},
      7])");
    const auto v = validate_subrequests(raw);
    const auto& s = v.decomposition.subrequests;
    REQUIRE(s.size() == 5);
    CHECK(s[0].type == SubRequestType::poi);
    CHECK_FALSE(s[1].mustsee);
    CHECK(s[2].type == SubRequestType::start);
    CHECK(s[3].type == SubRequestType::poi);
    CHECK_FALSE(s[4].mustsee);
    CHECK(v.report.size() >= 6);
  }

  TEST_CASE("validated subrequests satisfy the invariants") {
    // Every combination of field shapes, valid or not.
    const std::vector<json> texts{"", "x", 3, nullptr};
    const std::vector<json> flags{true, false, "yes", 1, nullptr};
    const std::vector<json> types{"start", "end", "POI", "itinerary", "bogus", 2};
    json raw = json::array();
    for (const auto& p : texts)
      for (const auto& n : texts)
        for (const auto& m : flags)
          for (const auto& t : types) raw.push_back({{"pos", p}, {"neg", n}, {"mustsee", m}, {"type", t}});
    const auto v = validate_subrequests(raw);
    int starts = 0, ends = 0;
    for (const auto& s : v.decomposition.subrequests) {
      CHECK_FALSE((s.pos.empty() && s.neg.empty()));
      if (s.mustsee) {
        CHECK_FALSE(s.pos.empty());
        CHECK(s.type != SubRequestType::itinerary);
      }
      starts += s.type == SubRequestType::start;
      ends += s.type == SubRequestType::end;
    }
    CHECK(starts <= 1);
    CHECK(ends <= 1);
  }

  TEST_CASE("nothing valid is an error") {
    CHECK_THROWS_AS(validate_subrequests(json::parse(R"([{"pos": ""}])")), DecompositionError);
    CHECK_THROWS_AS(validate_subrequests(json::object()), std::invalid_argument);
  }

  TEST_CASE("array replies are dug out of prose") {
    CHECK(parse_json_array_reply("```json\n[1]\n```") == json::array({1}));
    CHECK(parse_json_array_reply("Sure! [{\"pos\": \"a\"}] Hope it helps") ==
          json::parse(R"([{"pos": "a"}])"));
    CHECK(parse_json_array_reply(R"({"subrequests": [2]})") == json::array({2}));
    CHECK_THROWS(parse_json_array_reply("no json here"));
  }

  TEST_CASE("decompose through the gateway") {
    auto fake = std::make_shared<testing::FakeLlm>();
    auto gw = testing::live_gateway(fake);
    const PromptLibrary prompts;
    const auto v = decompose("Start at Iron Bridge, art galleries and no crowded malls", *gw, prompts);
    const auto& s = v.decomposition.subrequests;
    REQUIRE(s.size() == 3);
    CHECK(s[0] == SubRequest{"Iron Bridge", "", true, SubRequestType::start});
    CHECK(s[1].pos == "art galleries");
    CHECK(s[2].neg == "crowded malls");
    CHECK(v.decomposition.raw_request == "Start at Iron Bridge, art galleries and no crowded malls");
  }

  TEST_CASE("one reprompt carries the error") {
    auto scripted = std::make_shared<testing::ScriptedLlm>(
        std::vector<std::string>{"I think you want art.", R"([{"pos": "art"}])"});
    auto gw = testing::live_gateway(scripted);
    const auto v = decompose("art please", *gw, PromptLibrary());
    CHECK(v.decomposition.subrequests.size() == 1);
    REQUIRE(scripted->requests().size() == 2);
    CHECK(scripted->requests()[1].prompt.find("could not be used") != std::string::npos);
    CHECK(scripted->requests()[0].model_tag == "fast");
    CHECK(scripted->requests()[0].temperature == 0.0);
  }

  TEST_CASE("two bad replies fail") {
    auto scripted = std::make_shared<testing::ScriptedLlm>(std::vector<std::string>{"nope"});
    auto gw = testing::live_gateway(scripted);
    CHECK_THROWS_AS(decompose("art", *gw, PromptLibrary()), DecompositionError);
    CHECK(scripted->requests().size() == 2);
  }

  TEST_CASE("json form") {
    Decomposition d{{{"a", "b", false, SubRequestType::poi}}, "r"};
    const auto j = to_json(d);
    CHECK(j.at(0).at("type") == "POI");
    CHECK(to_json(d.subrequests[0]).at("neg") == "b");
  }
}
