#include "citywalk/service.hpp"

#include <charconv>
#include <iostream>

#include "citywalk/comparison.hpp"
#include "citywalk/ingest.hpp"
#include "citywalk/planner.hpp"
#include "citywalk/text.hpp"
#include "httplib.h"

namespace citywalk {

using json = nlohmann::json;

namespace {

HttpReply error_reply(int status, const std::string& code, const std::string& stage,
                      const std::string& message, const json& diagnostics = nullptr) {
  json j{{"code", code}, {"stage", stage}, {"message", message}};
  if (!diagnostics.is_null()) j["diagnostics"] = diagnostics;
  return {status, j.dump(), "application/json"};
}

int status_for(const std::string& code) {
  if (code == "invalid_request" || code == "invalid_input") return 400;
  if (code == "unknown_city") return 404;
  if (code == "cassette_miss" || code == "gateway_error" || code == "decomposition_failed") return 502;
  return 500;
}

std::optional<json> parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::optional<std::size_t> parse_size(const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return v;
}

}  // namespace

struct Service::Impl {
  std::shared_ptr<ServiceState> state;
  httplib::Server server;
};

Service::Service(std::shared_ptr<ServiceState> state) : impl_(std::make_unique<Impl>()) {
  if (!state || !state->gateway) throw std::invalid_argument("service needs a state with a gateway");
  impl_->state = std::move(state);
  auto& server = impl_->server;
  server.set_payload_max_length(impl_->state->config.max_body_bytes);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"}});

  const auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  server.Post("/v1/plan", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_plan(req.body));
  });
  server.Get("/v1/pois", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    send(res, handle_pois(params));
  });
  server.Post("/v1/pois/ingest", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_ingest(req.body));
  });
  server.Post("/v1/eval/compare", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_compare(req.body, req.get_header_value("Authorization")));
  });
  server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_health());
  });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string code = "http_error";
    if (res.status == 404) code = "not_found";
    if (res.status == 413) code = "payload_too_large";
    const auto reply = error_reply(res.status, code, "http", httplib::status_message(res.status));
    res.set_content(reply.body, reply.content_type);
  });
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    std::cerr << req.method << " " << req.path << " " << res.status << "\n";
  });
}

Service::~Service() { stop(); }

HttpReply Service::handle_health() { return {200, "ok", "text/plain"}; }

HttpReply Service::handle_plan(const std::string& body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_reply(400, "invalid_json", "validate", "body must be a JSON object");
  PlanRequest req;
  Variant variant = Variant::full;
  try {
    req.request = j->value("request", "");
    req.city = j->value("city", "");
    req.style = j->value("style", "");
    if (j->contains("overrides")) {
      for (const auto& [k, v] : j->at("overrides").items()) {
        req.overrides[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    if (j->contains("variant")) {
      const auto v = parse_variant(j->at("variant").get<std::string>());
      if (!v) return error_reply(400, "invalid_request", "validate", "unknown variant");
      variant = *v;
    }
  } catch (const json::exception& e) {
    return error_reply(400, "invalid_request", "validate", e.what());
  }
  if (trim(req.request).empty()) {
    return error_reply(400, "invalid_request", "validate", "request must not be empty");
  }
  const auto& state = *impl_->state;
  const auto snapshot = state.store.snapshot();
  try {
    const auto response = plan(req, *snapshot, *state.gateway, state.prompts, state.config, variant);
    return {200, to_json(response, state.config.emit_timings).dump(), "application/json"};
  } catch (const PlanError& e) {
    return error_reply(status_for(e.code()), e.code(), e.stage(), e.what(), e.diagnostics());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", "plan", e.what());
  }
}

HttpReply Service::handle_pois(const std::map<std::string, std::string>& params) {
  std::size_t page = 1;
  std::size_t page_size = 50;
  if (auto it = params.find("page"); it != params.end()) {
    const auto v = parse_size(it->second);
    if (!v || *v == 0) return error_reply(400, "invalid_request", "validate", "page must be >= 1");
    page = *v;
  }
  if (auto it = params.find("page_size"); it != params.end()) {
    const auto v = parse_size(it->second);
    if (!v || *v == 0 || *v > 500) {
      return error_reply(400, "invalid_request", "validate", "page_size must be in [1, 500]");
    }
    page_size = *v;
  }
  const std::string city = params.count("city") ? trim(params.at("city")) : "";
  const auto snapshot = impl_->state->store.snapshot();
  const PoiStore selected = city.empty() ? *snapshot : snapshot->subset_city(city);
  json pois = json::array();
  std::size_t index = 0;
  const std::size_t first = (page - 1) * page_size;
  for (const auto& [id, poi] : selected.pois()) {
    if (index >= first && index < first + page_size) pois.push_back(poi_to_json(poi));
    ++index;
  }
  json out{{"city", city},
           {"page", page},
           {"page_size", page_size},
           {"total", selected.size()},
           {"pois", pois}};
  return {200, out.dump(), "application/json"};
}

HttpReply Service::handle_ingest(const std::string& body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_reply(400, "invalid_json", "validate", "body must be a JSON object");
  std::string post, city;
  try {
    post = j->value("post_text", "");
    city = j->value("city", "");
  } catch (const json::exception& e) {
    return error_reply(400, "invalid_request", "validate", e.what());
  }
  if (trim(post).empty()) return error_reply(400, "invalid_request", "validate", "post_text must not be empty");
  auto& state = *impl_->state;
  if (!state.geocoder) {
    return error_reply(503, "geocoder_unavailable", "ingest", "no geocoder configured");
  }

  std::optional<std::string> failure;
  const auto report = state.store.mutate([&](PoiStore& store) {
    try {
      return ingest_post(post, city, store, *state.gateway, *state.geocoder, state.prompts);
    } catch (const IngestError& e) {
      failure = e.what();
      return e.partial();
    }
  });
  if (state.persist_path && !report.stored.empty()) {
    try {
      state.store.snapshot()->save(*state.persist_path);
    } catch (const std::exception& e) {
      return error_reply(500, "store_error", "persist", e.what());
    }
  }
  const auto snapshot = state.store.snapshot();
  json pois = json::array();
  for (PoiId id : report.stored) pois.push_back(poi_to_json(snapshot->at(id)));
  json result{{"stored", report.stored}, {"skipped", report.skipped}, {"pois", pois}};
  if (failure) return error_reply(502, "ingest_failed", "ingest", *failure, result);
  return {200, result.dump(), "application/json"};
}

HttpReply Service::handle_compare(const std::string& body, const std::string& authorization) {
  auto& state = *impl_->state;
  if (state.config.admin_token.empty()) {
    return error_reply(403, "forbidden", "auth", "admin endpoints are disabled");
  }
  if (authorization != "Bearer " + state.config.admin_token) {
    return error_reply(401, "unauthorized", "auth", "admin token required");
  }
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_reply(400, "invalid_json", "validate", "body must be a JSON object");

  std::vector<GroundTruthItinerary> dataset;
  std::vector<std::string> names{"full", "no-cso", "llm-baseline"};
  ComparisonOptions options;
  options.judge_trials = state.config.judge_trials;
  options.judge_seed = state.config.judge_seed;
  options.judge_model = state.config.strong_model;
  options.margin_sa = state.config.ordering.sa;
  options.fuzzy_threshold = state.config.retrieval.fuzzy_threshold;
  try {
    options.city = j->value("city", "");
    for (const auto& item : j->at("dataset")) {
      dataset.push_back({item.at("request").get<std::string>(),
                         item.at("poi_ids").get<std::vector<PoiId>>()});
    }
    if (j->contains("generators")) names = j->at("generators").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    return error_reply(400, "invalid_request", "validate", e.what());
  }
  if (dataset.empty()) return error_reply(400, "invalid_request", "validate", "dataset must not be empty");

  const auto snapshot = state.store.snapshot();
  try {
    validate_ground_truth(dataset, *snapshot);
    std::vector<std::unique_ptr<GeneratorAdapter>> adapters;
    std::vector<GeneratorAdapter*> raw;
    for (const auto& n : names) {
      adapters.push_back(make_adapter(n, *snapshot, *state.gateway, state.prompts, state.config));
      raw.push_back(adapters.back().get());
    }
    const auto report = run_comparison(raw, dataset, *snapshot, state.geocoder.get(),
                                       state.gateway.get(), state.prompts, options);
    return {200, report.to_json().dump(), "application/json"};
  } catch (const StoreError& e) {
    return error_reply(400, "invalid_request", "validate", e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(400, "invalid_request", "validate", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", "eval", e.what());
  }
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace citywalk
