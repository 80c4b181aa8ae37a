#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

namespace citywalk::testing {

namespace {

double cost_of(const DistanceMatrix& d, const std::vector<std::size_t>& order) {
  double c = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) c += d(order[i - 1], order[i]);
  return c;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0.0, nb = 0.0, dot = 0.0;
  for (double x : a) na += x * x;
  for (double x : b) nb += x * x;
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na == 0.0 || nb == 0.0) return 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

void sort_desc(std::vector<ScoredPoi>& v) {
  std::sort(v.begin(), v.end(), [](const ScoredPoi& a, const ScoredPoi& b) {
    return a.score != b.score ? a.score > b.score : a.poi_id < b.poi_id;
  });
}

}  // namespace

OraclePath brute_force_fixed_path(const DistanceMatrix& d, std::size_t start, std::size_t end) {
  const std::size_t n = d.size();
  if (n == 1) return {{0}, 0.0};
  std::vector<std::size_t> middle;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != start && i != end) middle.push_back(i);
  }
  OraclePath best{{}, std::numeric_limits<double>::infinity()};
  do {
    std::vector<std::size_t> order{start};
    order.insert(order.end(), middle.begin(), middle.end());
    order.push_back(end);
    const double c = cost_of(d, order);
    if (c < best.cost - 1e-9 * std::max(1.0, std::abs(c))) best = {order, c};
  } while (std::next_permutation(middle.begin(), middle.end()));
  return best;
}

double brute_force_open_path(const DistanceMatrix& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, cost_of(d, order));
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

double held_karp_tour(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n <= 1) return 0.0;
  const std::size_t full = std::size_t{1} << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * n, inf);
  dp[1 * n + 0] = 0.0;
  for (std::size_t mask = 1; mask < full; ++mask) {
    if (!(mask & 1)) continue;
    for (std::size_t last = 0; last < n; ++last) {
      const double here = dp[mask * n + last];
      if (here == inf) continue;
      for (std::size_t next = 1; next < n; ++next) {
        if (mask & (std::size_t{1} << next)) continue;
        const std::size_t m2 = mask | (std::size_t{1} << next);
        dp[m2 * n + next] = std::min(dp[m2 * n + next], here + d(last, next));
      }
    }
  }
  double best = inf;
  for (std::size_t last = 1; last < n; ++last) best = std::min(best, dp[(full - 1) * n + last] + d(last, 0));
  return best;
}

std::size_t max_clique_size(const std::vector<std::vector<bool>>& adjacent) {
  const std::size_t n = adjacent.size();
  std::size_t best = 0;
  std::vector<std::size_t> current;
  std::function<void(std::vector<std::size_t>)> grow = [&](std::vector<std::size_t> cand) {
    if (cand.empty()) {
      best = std::max(best, current.size());
      return;
    }
    while (!cand.empty()) {
      if (current.size() + cand.size() <= best) return;
      const std::size_t v = cand.front();
      cand.erase(cand.begin());
      std::vector<std::size_t> next;
      for (std::size_t u : cand) {
        if (adjacent[v][u]) next.push_back(u);
      }
      current.push_back(v);
      grow(next);
      current.pop_back();
    }
  };
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  grow(all);
  return best;
}

std::vector<GeoPoint> random_points(Rng& rng, std::size_t n, double side_m) {
  constexpr double lon0 = 121.47, lat0 = 31.23;
  const double dlat = side_m / 111320.0;
  const double dlon = side_m / (111320.0 * std::cos(lat0 * 3.14159265358979323846 / 180.0));
  std::vector<GeoPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(lon0 + dlon * rng.uniform01(), lat0 + dlat * rng.uniform01());
  }
  return out;
}

std::vector<ScoredPoi> oracle_retrieve(const Decomposition& decomposition, const PoiStore& store,
                                       const std::vector<PoiId>& must_ids,
                                       const RetrievalOptions& options, std::size_t dim) {
  std::map<PoiId, std::vector<double>> vec;
  for (const auto& [id, poi] : store.pois()) vec[id] = stub_embed(poi.context, dim);

  std::map<PoiId, std::vector<double>> terms;
  std::vector<std::vector<double>> filters;
  for (const auto& sub : decomposition.subrequests) {
    if (sub.pos.empty()) {
      filters.push_back(stub_embed(sub.neg, dim));
      continue;
    }
    const auto pos = stub_embed(sub.pos, dim);
    std::vector<ScoredPoi> all;
    for (const auto& [id, v] : vec) all.push_back({id, cosine(pos, v)});
    sort_desc(all);
    if (all.size() > options.k_per_subrequest) all.resize(options.k_per_subrequest);
    if (!sub.neg.empty()) {
      const auto neg = stub_embed(sub.neg, dim);
      for (auto& s : all) s.score -= cosine(neg, vec[s.poi_id]);
      sort_desc(all);
    }
    for (const auto& s : all) terms[s.poi_id].push_back(s.score);
  }
  for (const auto& f : filters) {
    for (auto& [id, t] : terms) t.push_back(-cosine(f, vec[id]));
  }
  std::vector<ScoredPoi> fused;
  for (auto& [id, t] : terms) {
    std::sort(t.begin(), t.end());
    fused.push_back({id, std::accumulate(t.begin(), t.end(), 0.0)});
  }
  sort_desc(fused);
  if (fused.size() > options.final_k) fused.resize(options.final_k);
  for (PoiId id : must_ids) {
    auto it = std::find_if(fused.begin(), fused.end(), [&](const ScoredPoi& s) { return s.poi_id == id; });
    if (it == fused.end()) {
      fused.push_back({id, options.mustsee_score});
    } else {
      it->score = options.mustsee_score;
    }
  }
  sort_desc(fused);
  return fused;
}

}  // namespace citywalk::testing
