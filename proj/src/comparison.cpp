#include "citywalk/comparison.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "citywalk/retrieval.hpp"
#include "citywalk/text.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

std::string numbered_text(const std::vector<std::string>& names, const std::string& narrative) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += std::to_string(i + 1) + ". " + names[i] + "\n";
  if (!narrative.empty()) out += "\n" + narrative;
  return out;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

PipelineAdapter::PipelineAdapter(Variant variant, const PoiStore& store, LlmGateway& gateway,
                                 const PromptLibrary& prompts, Config config)
    : variant_(variant), store_(store), gateway_(gateway), prompts_(prompts), config_(std::move(config)) {}

GeneratedItinerary PipelineAdapter::run(const std::string& request, const std::string& city) {
  PlanRequest req;
  req.request = request;
  req.city = city;
  const auto response = plan(req, store_, gateway_, prompts_, config_, variant_);
  GeneratedItinerary out;
  out.ids = response.itinerary.poi_ids;
  for (const auto& p : response.itinerary_pois) out.names.push_back(p.name);
  out.text = numbered_text(out.names, response.itinerary.narrative);
  return out;
}

LlmBaselineAdapter::LlmBaselineAdapter(const PoiStore& store, LlmGateway& gateway,
                                       const PromptLibrary& prompts, Config config)
    : store_(store), gateway_(gateway), prompts_(prompts), config_(std::move(config)) {}

GeneratedItinerary LlmBaselineAdapter::run(const std::string& request, const std::string& city) {
  const std::string prompt = render_template(
      prompts_.text(PromptId::baseline),
      {{"city", city.empty() ? std::string("the city") : city},
       {"thoughts_instruction", ""},
       {"request", trim(request)},
       {"output_format", R"({"pois": ["<place name>", ...], "itinerary": "<itinerary text>"})"}});
  const std::string reply = gateway_.chat(
      ChatRequest{prompt, config_.generate.temperature, config_.generate.max_tokens, config_.strong_model});

  const std::string body = strip_code_fences(reply);
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw Error("baseline reply is not JSON");
    }
    j = json::parse(body.substr(open, close - open + 1));
  }
  if (!j.is_object() || !j.contains("pois") || !j.at("pois").is_array()) {
    throw Error("baseline reply lacks a 'pois' list");
  }
  GeneratedItinerary out;
  out.database_constrained = false;
  for (const auto& v : j.at("pois")) {
    if (v.is_string()) {
      out.names.push_back(trim(v.get<std::string>()));
    } else if (v.is_object() && v.contains("name") && v.at("name").is_string()) {
      out.names.push_back(trim(v.at("name").get<std::string>()));
    }
  }
  out.names.erase(std::remove(out.names.begin(), out.names.end(), std::string()), out.names.end());
  const PoiStore local = city.empty() ? store_ : store_.subset_city(city);
  for (const auto& n : out.names) {
    if (auto id = resolve_place_name(n, local, config_.retrieval.fuzzy_threshold)) {
      if (std::find(out.ids.begin(), out.ids.end(), *id) == out.ids.end()) out.ids.push_back(*id);
    }
  }
  const std::string narrative =
      j.contains("itinerary") && j.at("itinerary").is_string() ? j.at("itinerary").get<std::string>() : "";
  out.text = numbered_text(out.names, narrative);
  return out;
}

IpGreedyAdapter::IpGreedyAdapter(const PoiStore& store, std::size_t length)
    : store_(store), length_(std::max<std::size_t>(length, 1)) {}

GeneratedItinerary IpGreedyAdapter::run(const std::string&, const std::string& city) {
  const PoiStore local = city.empty() ? store_ : store_.subset_city(city);
  if (local.empty()) throw Error("no POIs for city '" + city + "'");
  std::vector<ScoredPoi> ranked;
  for (const auto& [id, poi] : local.pois()) ranked.push_back({id, poi.rating});
  sort_ranked(ranked);
  if (ranked.size() > length_) ranked.resize(length_);

  std::vector<PoiId> remaining;
  for (const auto& r : ranked) remaining.push_back(r.poi_id);
  GeneratedItinerary out;
  out.ids.push_back(remaining.front());
  remaining.erase(remaining.begin());
  while (!remaining.empty()) {
    const GeoPoint here = local.at(out.ids.back()).location;
    auto best = remaining.begin();
    double best_d = haversine_distance(here, local.at(*best).location);
    for (auto it = remaining.begin() + 1; it != remaining.end(); ++it) {
      const double d = haversine_distance(here, local.at(*it).location);
      if (d < best_d) {
        best = it;
        best_d = d;
      }
    }
    out.ids.push_back(*best);
    remaining.erase(best);
  }
  for (PoiId id : out.ids) out.names.push_back(local.at(id).name);
  out.text = numbered_text(out.names, "");
  return out;
}

std::unique_ptr<GeneratorAdapter> make_adapter(const std::string& name, const PoiStore& store,
                                               LlmGateway& gateway, const PromptLibrary& prompts,
                                               const Config& config) {
  const std::string n = to_lower(trim(name));
  if (auto v = parse_variant(n)) return std::make_unique<PipelineAdapter>(*v, store, gateway, prompts, config);
  if (n == "llm-baseline") return std::make_unique<LlmBaselineAdapter>(store, gateway, prompts, config);
  if (n == "ip-greedy") return std::make_unique<IpGreedyAdapter>(store, config.generate.fallback_length);
  throw std::invalid_argument("unknown generator '" + name + "'");
}

ComparisonReport run_comparison(std::span<GeneratorAdapter* const> generators,
                                std::span<const GroundTruthItinerary> dataset,
                                const PoiStore& store, Geocoder* geocoder,
                                LlmGateway* judge_gateway, const PromptLibrary& prompts,
                                const ComparisonOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("dataset must not be empty");
  if (generators.empty()) throw std::invalid_argument("no generators to compare");
  ComparisonReport report;
  report.city = options.city;
  report.reference = options.reference;

  for (GeneratorAdapter* g : generators) {
    GeneratorSummary summary;
    summary.generator = g->name();
    double rr = 0.0, am = 0.0, ol = 0.0, fr = 0.0;
    std::size_t n_rr = 0, n_am = 0, n_ol = 0, n_fr = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      ComparisonRow row;
      row.generator = summary.generator;
      row.request_index = i;
      row.request = dataset[i].user_request;
      ++summary.requests;
      try {
        const auto gen = g->run(dataset[i].user_request, options.city);
        row.ids = gen.ids;
        row.text = gen.text;
        row.recall = recall_rate(gen.ids, dataset[i].poi_ids);
        if (gen.ids.size() >= 2) {
          const auto m = average_margin(gen.ids, store, options.margin_sa);
          row.margin_m = m.meters_per_poi;
          row.margin_approximate = m.approximate;
          row.overlaps = overlaps(gen.ids, store);
        }
        if (!gen.database_constrained && geocoder && !gen.names.empty()) {
          row.fail_rate = fail_rate(gen.names, *geocoder, options.city, options.fuzzy_threshold);
        }
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        ++summary.failures;
      }
      if (row.ok) {
        rr += row.recall;
        ++n_rr;
        if (row.margin_m) {
          am += *row.margin_m;
          ++n_am;
        }
        if (row.overlaps) {
          ol += static_cast<double>(*row.overlaps);
          ++n_ol;
        }
        if (row.fail_rate) {
          fr += *row.fail_rate;
          ++n_fr;
        }
      }
      report.rows.push_back(std::move(row));
    }
    if (n_rr) summary.recall = rr / static_cast<double>(n_rr);
    if (n_am) summary.margin_m = am / static_cast<double>(n_am);
    if (n_ol) summary.overlaps = ol / static_cast<double>(n_ol);
    if (n_fr) summary.fail_rate = fr / static_cast<double>(n_fr);
    report.summaries.push_back(std::move(summary));
  }

  if (options.judge_trials > 0 && judge_gateway) {
    std::map<std::pair<std::string, std::size_t>, const ComparisonRow*> by_key;
    for (const auto& row : report.rows) by_key[{row.generator, row.request_index}] = &row;
    for (auto& summary : report.summaries) {
      if (summary.generator == options.reference) continue;
      JudgeSummary js;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto a = by_key.find({summary.generator, i});
        const auto b = by_key.find({options.reference, i});
        if (a == by_key.end() || b == by_key.end() || !a->second->ok || !b->second->ok) continue;
        JudgeOptions jo;
        jo.trials = options.judge_trials;
        jo.seed = options.judge_seed + i;
        jo.model_tag = options.judge_model;
        try {
          const auto r = llm_judge(a->second->text, b->second->text, dataset[i].user_request,
                                   *judge_gateway, prompts, jo);
          js.pq += r.pq;
          js.iq += r.iq;
          js.match += r.match;
          ++js.pairs;
        } catch (const std::exception&) {
          // An unjudgeable pair is left out of the average.
        }
      }
      if (js.pairs) {
        const double n = static_cast<double>(js.pairs);
        js.pq /= n;
        js.iq /= n;
        js.match /= n;
        summary.judge = js;
      }
    }
  }
  return report;
}

json ComparisonReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back(json{{"generator", r.generator},
                             {"request_index", r.request_index},
                             {"request", r.request},
                             {"ok", r.ok},
                             {"error", r.error},
                             {"poi_ids", r.ids},
                             {"recall_rate", r.ok ? json(r.recall) : json(nullptr)},
                             {"avg_margin_m", optional_json(r.margin_m)},
                             {"avg_margin_approximate", r.margin_approximate},
                             {"overlaps", optional_json(r.overlaps)},
                             {"fail_rate", optional_json(r.fail_rate)}});
  }
  json summaries_json = json::array();
  for (const auto& s : summaries) {
    json j{{"generator", s.generator},
           {"requests", s.requests},
           {"failures", s.failures},
           {"recall_rate", optional_json(s.recall)},
           {"avg_margin_m", optional_json(s.margin_m)},
           {"overlaps", optional_json(s.overlaps)},
           {"fail_rate", optional_json(s.fail_rate)}};
    if (s.judge) {
      j["judge"] = {{"PQ", s.judge->pq}, {"IQ", s.judge->iq}, {"Match", s.judge->match},
                    {"pairs", s.judge->pairs}, {"reference", reference}};
    }
    summaries_json.push_back(std::move(j));
  }
  return json{{"city", city}, {"reference", reference}, {"summaries", summaries_json}, {"rows", rows_json}};
}

std::string ComparisonReport::to_tsv() const {
  std::string out = "generator\trequests\tfailures\tRR\tAM_m\tOL\tFR\tPQ\tIQ\tMatch\n";
  for (const auto& s : summaries) {
    out += s.generator + "\t" + std::to_string(s.requests) + "\t" + std::to_string(s.failures) +
           "\t" + cell(s.recall) + "\t" + cell(s.margin_m) + "\t" + cell(s.overlaps) + "\t" +
           cell(s.fail_rate);
    if (s.judge) {
      out += "\t" + fixed(s.judge->pq) + "\t" + fixed(s.judge->iq) + "\t" + fixed(s.judge->match);
    } else {
      out += "\tn/a\tn/a\tn/a";
    }
    out += "\n";
  }
  return out;
}

std::string ComparisonReport::to_text() const {
  std::vector<std::vector<std::string>> table;
  std::string tsv = to_tsv();
  std::size_t start = 0;
  while (start < tsv.size()) {
    const auto end = tsv.find('\n', start);
    const std::string line = tsv.substr(start, end - start);
    std::vector<std::string> cells;
    std::size_t c = 0;
    while (true) {
      const auto tab = line.find('\t', c);
      cells.push_back(line.substr(c, tab == std::string::npos ? std::string::npos : tab - c));
      if (tab == std::string::npos) break;
      c = tab + 1;
    }
    table.push_back(std::move(cells));
    start = end + 1;
  }
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += line + "\n";
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  if (failed) {
    out += "\nFailures:\n";
    for (const auto& r : rows) {
      if (!r.ok) out += "- " + r.generator + " #" + std::to_string(r.request_index) + ": " + r.error + "\n";
    }
  }
  return out;
}

}  // namespace citywalk
