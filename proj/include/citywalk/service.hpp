#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "citywalk/config.hpp"
#include "citywalk/geocoder.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"

namespace citywalk {

struct ServiceState {
  Config config;
  SharedPoiStore store;
  std::shared_ptr<LlmGateway> gateway;
  PromptLibrary prompts;
  std::shared_ptr<Geocoder> geocoder;  // ingestion and fail rate; may be null
  std::optional<std::filesystem::path> persist_path;  // store file rewritten after ingest
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// JSON API:
///   POST /v1/plan          {request, city, style?, variant?, overrides?}
///   GET  /v1/pois          ?city=&page=&page_size=
///   POST /v1/pois/ingest   {post_text, city}
///   POST /v1/eval/compare  {dataset: [{request, poi_ids}], generators?, city?}
///                          (Authorization: Bearer <service.admin_token>)
///   GET  /healthz
/// Errors are {code, stage, message[, diagnostics]}.
class Service {
 public:
  explicit Service(std::shared_ptr<ServiceState> state);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpReply handle_plan(const std::string& body);
  HttpReply handle_pois(const std::map<std::string, std::string>& params);
  HttpReply handle_ingest(const std::string& body);
  HttpReply handle_compare(const std::string& body, const std::string& authorization);
  HttpReply handle_health();

  /// Binds the listening socket; port 0 picks a free port. Returns the port
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace citywalk
