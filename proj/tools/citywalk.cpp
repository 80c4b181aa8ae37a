// Command-line front end: plan, ingest, eval, serve, config.
// Results go to stdout, logs and errors to stderr.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "citywalk/comparison.hpp"
#include "citywalk/config.hpp"
#include "citywalk/ingest.hpp"
#include "citywalk/planner.hpp"
#include "citywalk/runtime.hpp"
#include "citywalk/service.hpp"
#include "citywalk/text.hpp"

using namespace citywalk;
using json = nlohmann::json;

namespace {

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void log(const std::string& line) { std::cerr << "citywalk: " << line << "\n"; }

std::string read_text(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct Runtime {
  Config config;
  std::shared_ptr<LlmGateway> gateway;
  PromptLibrary prompts;
  PoiStore store;
};

Runtime open_runtime(const std::string& config_path) {
  Runtime rt;
  rt.config = load_config(config_path.empty() ? std::nullopt
                                              : std::optional<std::filesystem::path>(config_path));
  rt.gateway = make_gateway(rt.config);
  rt.prompts = make_prompts(rt.config);
  rt.store = load_store(rt.config);
  const auto embedded = ensure_embeddings(rt.store, *rt.gateway);
  log("loaded " + std::to_string(rt.store.size()) + " POIs (" + std::to_string(embedded) +
      " embedded now), chat mode " + std::string(to_string(rt.config.gateway.chat_mode)));
  return rt;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

struct PlanArgs {
  std::string config, city, request, style, variant = "full", out = "text", geojson;
  std::vector<std::string> overrides;
};

int run_plan(const PlanArgs& a) {
  auto rt = open_runtime(a.config);
  const auto variant = parse_variant(a.variant);
  if (!variant) throw CLI::ValidationError("--variant", "unknown variant '" + a.variant + "'");
  PlanRequest req{a.request, a.city, a.style, {}};
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
    req.overrides[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
  }
  try {
    const auto response = plan(req, rt.store, *rt.gateway, rt.prompts, rt.config, *variant);
    if (!a.geojson.empty()) {
      write_text(a.geojson, response.route_geojson.dump(2) + "\n");
      log("wrote route to " + a.geojson);
    }
    if (a.out == "json") {
      std::cout << to_json(response, rt.config.emit_timings).dump(2) << "\n";
    } else if (a.out == "geojson") {
      std::cout << response.route_geojson.dump(2) << "\n";
    } else {
      std::cout << render_text(response);
    }
    for (const auto& w : response.warnings) log("warning: " + w);
    return 0;
  } catch (const PlanError& e) {
    std::cerr << e.to_json().dump(2) << "\n";
    return 1;
  }
}

int run_ingest(const std::string& config_path, const std::string& city, const std::string& file,
               bool dry_run) {
  auto rt = open_runtime(config_path);
  auto geocoder = make_geocoder(rt.config, rt.store);
  int status = 0;
  IngestReport report;
  try {
    report = ingest_post(read_text(file), city, rt.store, *rt.gateway, *geocoder, rt.prompts);
  } catch (const IngestError& e) {
    log(std::string("ingest failed: ") + e.what());
    report = e.partial();
    status = 1;
  }
  json pois = json::array();
  for (PoiId id : report.stored) pois.push_back(poi_to_json(rt.store.at(id)));
  std::cout << json{{"stored", report.stored}, {"skipped", report.skipped}, {"pois", pois}}.dump(2)
            << "\n";
  for (const auto& s : report.skipped) log("skipped " + s);
  if (!report.stored.empty() && !dry_run) {
    if (rt.config.poi_file.empty()) {
      log("store.poi_file is not set; nothing persisted");
    } else {
      rt.store.save(rt.config.poi_file);
      log("saved " + std::to_string(rt.store.size()) + " POIs to " + rt.config.poi_file);
    }
  }
  return status;
}

struct EvalArgs {
  std::string config, dataset, generators = "full,no-cso,llm-baseline", city, format = "tsv";
  int judge_trials = -1;
};

int run_eval(const EvalArgs& a) {
  auto rt = open_runtime(a.config);
  const std::string dataset_path = a.dataset.empty() ? rt.config.ground_truth : a.dataset;
  if (dataset_path.empty()) throw CLI::ValidationError("--dataset", "no dataset given and store.ground_truth unset");
  const auto dataset = load_ground_truth(dataset_path);
  validate_ground_truth(dataset, rt.store);
  auto geocoder = make_geocoder(rt.config, rt.store);

  std::vector<std::unique_ptr<GeneratorAdapter>> adapters;
  std::vector<GeneratorAdapter*> raw;
  for (const auto& name : split_list(a.generators)) {
    adapters.push_back(make_adapter(name, rt.store, *rt.gateway, rt.prompts, rt.config));
    raw.push_back(adapters.back().get());
  }
  ComparisonOptions options;
  options.city = a.city;
  options.fuzzy_threshold = rt.config.retrieval.fuzzy_threshold;
  options.judge_trials = a.judge_trials >= 0 ? static_cast<std::size_t>(a.judge_trials)
                                             : rt.config.judge_trials;
  options.judge_seed = rt.config.judge_seed;
  options.judge_model = rt.config.strong_model;
  options.margin_sa = rt.config.ordering.sa;
  log("evaluating " + std::to_string(raw.size()) + " generators on " +
      std::to_string(dataset.size()) + " requests");
  const auto report = run_comparison(raw, dataset, rt.store, geocoder.get(), rt.gateway.get(),
                                     rt.prompts, options);
  if (a.format == "json") {
    std::cout << report.to_json().dump(2) << "\n";
  } else if (a.format == "text") {
    std::cout << report.to_text();
  } else {
    std::cout << report.to_tsv();
  }
  return 0;
}

int run_serve(const std::string& config_path, const std::string& host, int port) {
  auto rt = open_runtime(config_path);
  auto state = std::make_shared<ServiceState>();
  state->config = rt.config;
  if (!host.empty()) state->config.host = host;
  if (port >= 0) state->config.port = port;
  state->geocoder = make_geocoder(rt.config, rt.store);
  state->store = SharedPoiStore(std::move(rt.store));
  state->gateway = rt.gateway;
  state->prompts = rt.prompts;
  if (!rt.config.poi_file.empty()) state->persist_path = rt.config.poi_file;

  Service service(state);
  const int bound = service.bind(state->config.host, state->config.port);
  if (bound < 0) {
    log("cannot bind " + state->config.host + ":" + std::to_string(state->config.port));
    return 1;
  }
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  log("listening on http://" + state->config.host + ":" + std::to_string(bound));
  service.listen_after_bind();
  g_service = nullptr;
  log("stopped");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Urban itinerary planner"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "Plan an itinerary for one request");
  plan_cmd->add_option("--config", plan_args.config, "INI config file (default: $CITYWALK_CONFIG)");
  plan_cmd->add_option("--city", plan_args.city, "City whose POIs are used")->required();
  plan_cmd->add_option("--request", plan_args.request, "Natural-language request")->required();
  plan_cmd->add_option("--style", plan_args.style, "Extra instruction for the narrative style");
  plan_cmd->add_option("--variant", plan_args.variant, "full, no-rd, no-ppr or no-cso");
  plan_cmd->add_option("--out", plan_args.out, "Output format")
      ->check(CLI::IsMember({"text", "json", "geojson"}));
  plan_cmd->add_option("--geojson", plan_args.geojson, "Also write the route GeoJSON to this file");
  plan_cmd->add_option("--set", plan_args.overrides, "Per-request override, section.key=value");

  std::string ingest_config, ingest_city, ingest_file;
  bool ingest_dry_run = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Add the POIs a travel post mentions");
  ingest_cmd->add_option("--config", ingest_config, "INI config file");
  ingest_cmd->add_option("--city", ingest_city, "City the post is about")->required();
  ingest_cmd->add_option("--file", ingest_file, "Post text file, '-' for stdin")->required();
  ingest_cmd->add_flag("--dry-run", ingest_dry_run, "Do not write the POI file");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compare generators on a ground-truth dataset");
  eval_cmd->add_option("--config", eval_args.config, "INI config file");
  eval_cmd->add_option("--dataset", eval_args.dataset, "Ground-truth TSV (default: store.ground_truth)");
  eval_cmd->add_option("--generators", eval_args.generators,
                       "Comma list of full, no-rd, no-ppr, no-cso, llm-baseline, ip-greedy");
  eval_cmd->add_option("--city", eval_args.city, "City passed to the direct LLM baseline");
  eval_cmd->add_option("--format", eval_args.format, "Output format")
      ->check(CLI::IsMember({"tsv", "json", "text"}));
  eval_cmd->add_option("--judge-trials", eval_args.judge_trials, "Judge trials per pair, 0 disables");

  std::string serve_config, serve_host;
  int serve_port = -1;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--config", serve_config, "INI config file");
  serve_cmd->add_option("--host", serve_host, "Override service.host");
  serve_cmd->add_option("--port", serve_port, "Override service.port (0 picks a free port)");

  std::string show_config;
  auto* config_cmd = app.add_subcommand("config", "Print the effective configuration as INI");
  config_cmd->add_option("--config", show_config, "INI config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*plan_cmd) return run_plan(plan_args);
    if (*ingest_cmd) return run_ingest(ingest_config, ingest_city, ingest_file, ingest_dry_run);
    if (*eval_cmd) return run_eval(eval_args);
    if (*serve_cmd) return run_serve(serve_config, serve_host, serve_port);
    if (*config_cmd) {
      const auto cfg = load_config(show_config.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(show_config));
      std::cout << render_config(cfg);
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
