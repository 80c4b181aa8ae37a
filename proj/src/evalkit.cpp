#include "citywalk/evalkit.hpp"

#include <numeric>
#include <set>

#include "citywalk/random.hpp"
#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk {

using json = nlohmann::json;

double recall_rate(std::span<const PoiId> generated, std::span<const PoiId> truth) {
  const std::set<PoiId> t(truth.begin(), truth.end());
  if (t.empty()) throw std::invalid_argument("ground truth must not be empty");
  const std::set<PoiId> g(generated.begin(), generated.end());
  std::size_t hit = 0;
  for (PoiId id : g) hit += t.count(id);
  return static_cast<double>(hit) / static_cast<double>(t.size());
}

MarginResult average_margin(const DistanceMatrix& d, const SAParams& sa, std::size_t sa_seeds) {
  const std::size_t n = d.size();
  if (n < 2) throw std::invalid_argument("average margin needs at least 2 POIs");
  std::vector<std::size_t> visit(n);
  std::iota(visit.begin(), visit.end(), 0);
  MarginResult out;
  out.route_m = path_cost(d, visit);
  if (n <= kExactMarginMaxN) {
    out.optimal_m = solve_open_path_exact(d, kExactMarginMaxN).cost;
  } else {
    out.optimal_m = solve_open_path_sa(d, sa, sa_seeds).cost;
    out.approximate = true;
    // Annealing can miss the optimum; the visit order itself is an upper bound.
    out.optimal_m = std::min(out.optimal_m, out.route_m);
  }
  out.meters_per_poi = (out.route_m - out.optimal_m) / static_cast<double>(n);
  return out;
}

MarginResult average_margin(std::span<const PoiId> ids, const PoiStore& store, const SAParams& sa,
                            std::size_t sa_seeds) {
  if (ids.size() < 2) throw std::invalid_argument("average margin needs at least 2 POIs");
  std::vector<GeoPoint> points;
  for (PoiId id : ids) points.push_back(store.at(id).location);
  return average_margin(build_distance_matrix(points), sa, sa_seeds);
}

std::size_t overlaps(std::span<const PoiId> ids, const PoiStore& store) {
  if (ids.size() < 2) throw std::invalid_argument("overlaps needs at least 2 POIs");
  std::vector<GeoPoint> points;
  for (PoiId id : ids) points.push_back(store.at(id).location);
  return count_self_intersections(points);
}

double fail_rate(std::span<const std::string> names, Geocoder& geocoder, std::string_view city,
                 int threshold) {
  if (names.empty()) throw std::invalid_argument("fail rate needs at least one name");
  std::size_t failed = 0;
  for (const auto& name : names) {
    const auto hits = geocoder.search(name, city);
    int best = 0;
    for (const auto& h : hits) best = std::max(best, token_set_ratio(name, h.name));
    if (best < threshold) ++failed;
  }
  return static_cast<double>(failed) / static_cast<double>(names.size());
}

std::optional<JudgeVerdict> parse_verdict(std::string_view reply) {
  const std::string body = strip_code_fences(reply);
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    try {
      j = json::parse(body.substr(open, close - open + 1));
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }
  if (!j.is_object()) return std::nullopt;
  const auto read = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    int x = -1;
    if (v.is_number_integer()) {
      x = v.get<int>();
    } else if (v.is_string()) {
      const auto s = trim(v.get<std::string>());
      if (s == "0" || s == "1" || s == "2") x = s[0] - '0';
    }
    if (x < 0 || x > 2) return std::nullopt;
    return x;
  };
  const auto pq = read("PQ");
  const auto iq = read("IQ");
  const auto match = read("Match");
  if (!pq || !iq || !match) return std::nullopt;
  return JudgeVerdict{*pq, *iq, *match};
}

JudgeResult llm_judge(std::string_view itinerary_a, std::string_view itinerary_b,
                      std::string_view request, LlmGateway& gateway,
                      const PromptLibrary& prompts, const JudgeOptions& options) {
  if (options.trials < 10) throw std::invalid_argument("judging needs at least 10 trials");
  Rng rng(options.seed);
  JudgeResult out;
  out.seed = options.seed;
  // Score of A for a verdict value, given whether A was shown first.
  const auto score = [](int v, bool a_first) {
    if (v == 0) return 0.5;
    return ((v == 1) == a_first) ? 1.0 : 0.0;
  };
  double pq = 0.0, iq = 0.0, match = 0.0;
  const std::size_t max_attempts = 2 * options.trials;
  for (std::size_t attempt = 0; attempt < max_attempts && out.trials < options.trials; ++attempt) {
    const bool a_first = rng.below(2) == 0;
    const std::string prompt = render_template(
        prompts.text(PromptId::judge),
        {{"round", std::to_string(attempt + 1)},
         {"request", trim(request)},
         {"first", trim(a_first ? itinerary_a : itinerary_b)},
         {"second", trim(a_first ? itinerary_b : itinerary_a)}});
    const auto verdict = parse_verdict(gateway.chat(ChatRequest{prompt, 0.0, 128, options.model_tag}));
    if (!verdict) {
      ++out.discarded;
      continue;
    }
    pq += score(verdict->pq, a_first);
    iq += score(verdict->iq, a_first);
    match += score(verdict->match, a_first);
    ++out.trials;
  }
  if (out.trials == 0) throw Error("judge produced no readable verdict");
  out.pq = pq / static_cast<double>(out.trials);
  out.iq = iq / static_cast<double>(out.trials);
  out.match = match / static_cast<double>(out.trials);
  return out;
}

}  // namespace citywalk
