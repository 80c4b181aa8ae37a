#include <cmath>
#include <filesystem>
#include <random>

#include "citywalk/llm_gateway.hpp"
#include "doctest.h"
#include "fake_llm.hpp"

using namespace citywalk;
namespace fs = std::filesystem;

namespace {

class Flaky : public Transport {
 public:
  explicit Flaky(int failures, bool retriable) : failures_(failures), retriable_(retriable) {}
  std::string chat(const ChatRequest&) override {
    ++calls;
    if (failures_-- > 0) throw TransportError("boom", retriable_);
    return "fine";
  }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string&) override {
    return std::vector<std::vector<double>>(texts.size(), std::vector<double>{0.6, 0.8});
  }
  int calls = 0;

 private:
  int failures_;
  bool retriable_;
};

GatewayOptions live_options(int retries) {
  GatewayOptions o;
  o.chat_mode = LlmMode::live;
  o.max_retries = retries;
  o.backoff = std::chrono::milliseconds(0);
  return o;
}

}  // namespace

TEST_SUITE("llm_gateway") {
  TEST_CASE("modes parse") {
    for (auto m : {LlmMode::live, LlmMode::record, LlmMode::replay, LlmMode::stub}) {
      CHECK(parse_llm_mode(to_string(m)) == m);
    }
    CHECK_FALSE(parse_llm_mode("psychic").has_value());
  }

  TEST_CASE("fingerprint covers model, temperature and normalised prompt") {
    const ChatRequest base{"hello\nworld", 0.0, 100, "fast"};
    const auto fp = fingerprint(base);
    CHECK(fp.size() == 64);
    CHECK(fingerprint({"hello\r\nworld  \n", 0.0, 100, "fast"}) == fp);
    CHECK(fingerprint({"hello\nworld", 0.0, 999, "fast"}) == fp);
    CHECK(fingerprint({"hello\nworld", 0.7, 100, "fast"}) != fp);
    CHECK(fingerprint({"hello\nworld", 0.0, 100, "strong"}) != fp);
    CHECK(fingerprint({"hello world", 0.0, 100, "fast"}) != fp);
    CHECK(embedding_fingerprint("m", "x") != embedding_fingerprint("n", "x"));
  }

  TEST_CASE("record then replay") {
    auto cassette = std::make_shared<Cassette>();
    auto fake = std::make_shared<testing::ScriptedLlm>(std::vector<std::string>{"first", "second"});
    auto rec = testing::recording_gateway(fake, cassette);
    const ChatRequest a{"prompt a", 0.0, 10, "fast"};
    const ChatRequest b{"prompt b", 0.0, 10, "fast"};
    CHECK(rec->chat(a) == "first");
    CHECK(rec->chat(b) == "second");
    CHECK(cassette->size() == 2);

    auto replay = testing::replay_gateway(cassette);
    CHECK(replay->chat(a) == "first");
    CHECK(replay->chat(b) == "second");
    CHECK_THROWS_AS(replay->chat({"prompt c", 0.0, 10, "fast"}), CassetteMiss);
    CHECK_THROWS_AS(replay->chat({"   ", 0.0, 10, "fast"}), std::invalid_argument);
  }

  TEST_CASE("cassette file round-trip") {
    const auto dir = fs::temp_directory_path() / ("citywalk_cas_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    const auto path = dir / "c.json";
    {
      Cassette bound(path);
      bound.record("fp1", {"r1", "fast", "t"});
      bound.record("fp2", {"r2", "strong", "t"});
    }
    const auto loaded = Cassette::load(path);
    CHECK(loaded.size() == 2);
    CHECK(loaded.lookup("fp2") == std::optional<std::string>("r2"));
    CHECK(loaded.entries().at("fp1") == Cassette::Entry{"r1", "fast", "t"});
  }

  TEST_CASE("retriable failures are retried") {
    auto flaky = std::make_shared<Flaky>(2, true);
    LlmGateway gw(live_options(3), flaky, nullptr);
    CHECK(gw.chat({"p", 0.0, 10, "fast"}) == "fine");
    CHECK(flaky->calls == 3);
  }

  TEST_CASE("retries are bounded") {
    auto flaky = std::make_shared<Flaky>(10, true);
    LlmGateway gw(live_options(2), flaky, nullptr);
    CHECK_THROWS_AS(gw.chat({"p", 0.0, 10, "fast"}), GatewayError);
    CHECK(flaky->calls == 3);
  }

  TEST_CASE("non-retriable failures surface at once") {
    auto flaky = std::make_shared<Flaky>(1, false);
    LlmGateway gw(live_options(5), flaky, nullptr);
    try {
      gw.chat({"p", 0.0, 10, "fast"});
      FAIL("expected a gateway error");
    } catch (const GatewayError& e) {
      CHECK_FALSE(e.retriable());
    }
    CHECK(flaky->calls == 1);
  }

  TEST_CASE("offline transport refuses") {
    GatewayOptions o;
    o.chat_mode = LlmMode::live;
    o.max_retries = 0;
    LlmGateway gw(o, std::make_shared<OfflineTransport>(), nullptr);
    CHECK_THROWS_AS(gw.chat({"p", 0.0, 10, "fast"}), GatewayError);
  }

  TEST_CASE("stub mode serves embeddings only") {
    GatewayOptions o;
    o.chat_mode = LlmMode::stub;
    LlmGateway gw(o, nullptr, nullptr);
    CHECK_THROWS_AS(gw.chat({"p", 0.0, 10, "fast"}), GatewayError);
    const auto v = gw.embed({"iron bridge", "river"});
    CHECK(v.size() == 2);
    CHECK(v[0] == stub_embed("iron bridge"));
    CHECK_THROWS_AS(gw.embed({}), std::invalid_argument);
  }

  TEST_CASE("embeddings record and replay") {
    auto cassette = std::make_shared<Cassette>();
    GatewayOptions o;
    o.embed_mode = LlmMode::record;
    o.embed_model = "m";
    LlmGateway rec(o, std::make_shared<Flaky>(0, false), cassette);
    CHECK(rec.embed_one("x") == std::vector<double>{0.6, 0.8});
    o.embed_mode = LlmMode::replay;
    LlmGateway rep(o, nullptr, cassette);
    CHECK(rep.embed_one("x") == std::vector<double>{0.6, 0.8});
    CHECK_THROWS_AS(rep.embed_one("y"), CassetteMiss);
  }

  TEST_CASE("stub embeddings are deterministic unit vectors") {
    const auto a = stub_embed("Iron Bridge over the river");
    CHECK(a == stub_embed("iron bridge, over THE river"));
    double n = 0.0;
    for (double x : a) n += x * x;
    CHECK(n == doctest::Approx(1.0));
    const auto empty = stub_embed("!!!", 16);
    CHECK(empty.size() == 16);
    CHECK(empty[0] == 1.0);
    CHECK_THROWS_AS(stub_embed("x", 0), std::invalid_argument);
  }

  TEST_CASE("token bucket without a rate never blocks") {
    TokenBucket bucket(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) bucket.acquire();
    CHECK(true);
  }
}
