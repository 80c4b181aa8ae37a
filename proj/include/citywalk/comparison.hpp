#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citywalk/config.hpp"
#include "citywalk/evalkit.hpp"
#include "citywalk/geocoder.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/planner.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"
#include "json.hpp"

namespace citywalk {

struct GeneratedItinerary {
  std::vector<PoiId> ids;          // resolved POIs in visit order
  std::vector<std::string> names;  // as produced by the generator
  std::string text;
  bool database_constrained = true;  // false: fail rate applies
};

class GeneratorAdapter {
 public:
  virtual ~GeneratorAdapter() = default;
  virtual std::string name() const = 0;
  virtual GeneratedItinerary run(const std::string& request, const std::string& city) = 0;
};

/// The planning pipeline or one of its ablations.
class PipelineAdapter : public GeneratorAdapter {
 public:
  PipelineAdapter(Variant variant, const PoiStore& store, LlmGateway& gateway,
                  const PromptLibrary& prompts, Config config);
  std::string name() const override { return std::string(to_string(variant_)); }
  GeneratedItinerary run(const std::string& request, const std::string& city) override;

 private:
  Variant variant_;
  const PoiStore& store_;
  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  Config config_;
};

/// Direct LLM planning with no database; names are matched back to stored
/// POIs for the route metrics.
class LlmBaselineAdapter : public GeneratorAdapter {
 public:
  LlmBaselineAdapter(const PoiStore& store, LlmGateway& gateway, const PromptLibrary& prompts,
                     Config config);
  std::string name() const override { return "llm-baseline"; }
  GeneratedItinerary run(const std::string& request, const std::string& city) override;

 private:
  const PoiStore& store_;
  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  Config config_;
};

/// Stand-in for the orienteering baseline: best-rated POIs of the city,
/// visited nearest-neighbour first from the best-rated one.
class IpGreedyAdapter : public GeneratorAdapter {
 public:
  IpGreedyAdapter(const PoiStore& store, std::size_t length);
  std::string name() const override { return "ip-greedy"; }
  GeneratedItinerary run(const std::string& request, const std::string& city) override;

 private:
  const PoiStore& store_;
  std::size_t length_;
};

/// Known names: full, no-rd, no-ppr, no-cso, llm-baseline, ip-greedy.
std::unique_ptr<GeneratorAdapter> make_adapter(const std::string& name, const PoiStore& store,
                                               LlmGateway& gateway, const PromptLibrary& prompts,
                                               const Config& config);

struct ComparisonRow {
  std::string generator;
  std::size_t request_index = 0;
  std::string request;
  bool ok = false;
  std::string error;
  std::vector<PoiId> ids;
  double recall = 0.0;
  std::optional<double> margin_m;  // needs two or more resolved POIs
  bool margin_approximate = false;
  std::optional<std::size_t> overlaps;
  std::optional<double> fail_rate;
  std::string text;
};

struct JudgeSummary {
  double pq = 0.0;
  double iq = 0.0;
  double match = 0.0;
  std::size_t pairs = 0;
};

struct GeneratorSummary {
  std::string generator;
  std::size_t requests = 0;
  std::size_t failures = 0;
  std::optional<double> recall;
  std::optional<double> margin_m;
  std::optional<double> overlaps;
  std::optional<double> fail_rate;
  std::optional<JudgeSummary> judge;  // win rate against the reference generator
};

struct ComparisonReport {
  std::string city;
  std::string reference;
  std::vector<ComparisonRow> rows;  // ordered by (generator, request)
  std::vector<GeneratorSummary> summaries;

  nlohmann::json to_json() const;
  /// Tab-separated summary table with a header line.
  std::string to_tsv() const;
  std::string to_text() const;
};

struct ComparisonOptions {
  std::string city;
  int fuzzy_threshold = 80;
  std::size_t judge_trials = 0;  // 0 disables judging
  std::uint64_t judge_seed = 0;
  std::string reference = "full";
  std::string judge_model = "strong";
  SAParams margin_sa;
};

/// Runs every generator on every request. A failing generator produces a
/// failure row and the run continues. Throws on an empty dataset.
ComparisonReport run_comparison(std::span<GeneratorAdapter* const> generators,
                                std::span<const GroundTruthItinerary> dataset,
                                const PoiStore& store, Geocoder* geocoder,
                                LlmGateway* judge_gateway, const PromptLibrary& prompts,
                                const ComparisonOptions& options);

}  // namespace citywalk
