#include "citywalk/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "citywalk/errors.hpp"
#include "citywalk/random.hpp"
#include "citywalk/retrieval.hpp"
#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Places sorted by id, so index order and id order agree.
std::vector<ScoredPlace> sorted_places(std::span<const ScoredPlace> places) {
  std::vector<ScoredPlace> out(places.begin(), places.end());
  std::sort(out.begin(), out.end(),
            [](const ScoredPlace& a, const ScoredPlace& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].id == out[i - 1].id) {
      throw std::invalid_argument("duplicate place id " + std::to_string(out[i].id));
    }
  }
  return out;
}

void check_tau(double tau) {
  if (!std::isfinite(tau) || tau <= 0.0) throw std::invalid_argument("tau must be positive");
}

std::vector<std::vector<bool>> adjacency(std::span<const ScoredPlace> places, double tau) {
  const std::size_t n = places.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (places[i].id == places[j].id) continue;
      if (haversine_distance(places[i].location, places[j].location) < tau) {
        adj[i][j] = adj[j][i] = true;
      }
    }
  }
  return adj;
}

class CliqueSearch {
 public:
  CliqueSearch(const std::vector<std::vector<bool>>& adj, std::span<const double> weights)
      : adj_(adj), weights_(weights) {}

  std::vector<std::size_t> run(const std::vector<bool>& alive) {
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      if (alive[i]) p.push_back(i);
    }
    std::vector<std::size_t> r;
    expand(r, p, {});
    return best_;
  }

 private:
  void expand(std::vector<std::size_t>& r, std::vector<std::size_t> p,
              std::vector<std::size_t> x) {
    if (p.empty()) {
      if (x.empty()) consider(r);
      return;
    }
    if (r.size() + p.size() < best_.size()) return;

    std::size_t pivot = p.front();
    std::size_t pivot_degree = 0;
    bool first = true;
    for (const auto* set : {&p, &x}) {
      for (std::size_t u : *set) {
        std::size_t deg = 0;
        for (std::size_t v : p) deg += adj_[u][v] ? 1 : 0;
        if (first || deg > pivot_degree) {
          pivot = u;
          pivot_degree = deg;
          first = false;
        }
      }
    }

    std::vector<std::size_t> branch;
    for (std::size_t v : p) {
      if (!adj_[pivot][v]) branch.push_back(v);
    }
    for (std::size_t v : branch) {
      std::vector<std::size_t> p2, x2;
      for (std::size_t u : p) {
        if (adj_[v][u]) p2.push_back(u);
      }
      for (std::size_t u : x) {
        if (adj_[v][u]) x2.push_back(u);
      }
      r.push_back(v);
      expand(r, std::move(p2), std::move(x2));
      r.pop_back();
      p.erase(std::find(p.begin(), p.end(), v));
      x.push_back(v);
    }
  }

  void consider(const std::vector<std::size_t>& r) {
    std::vector<std::size_t> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    double w = 0.0;
    for (std::size_t i : sorted) w += weights_[i];
    bool better = false;
    if (best_.empty() || sorted.size() > best_.size()) {
      better = true;
    } else if (sorted.size() == best_.size()) {
      if (w > best_weight_) {
        better = true;
      } else if (w == best_weight_ && sorted.front() < best_.front()) {
        better = true;
      }
    }
    if (better) {
      best_ = std::move(sorted);
      best_weight_ = w;
    }
  }

  const std::vector<std::vector<bool>>& adj_;
  std::span<const double> weights_;
  std::vector<std::size_t> best_;
  double best_weight_ = 0.0;
};

std::vector<Cluster> extract_sorted(const std::vector<ScoredPlace>& places, double tau) {
  const auto adj = adjacency(places, tau);
  std::vector<double> weights;
  weights.reserve(places.size());
  for (const auto& p : places) weights.push_back(p.score);

  std::vector<bool> alive(places.size(), true);
  std::size_t remaining = places.size();
  std::vector<Cluster> clusters;
  while (remaining > 0) {
    const auto clique = maximum_clique(adj, weights, alive);
    Cluster c;
    for (std::size_t i : clique) {
      c.member_ids.push_back(places[i].id);
      c.summed_score += places[i].score;
      alive[i] = false;
    }
    remaining -= clique.size();
    clusters.push_back(std::move(c));
  }
  return clusters;
}

// The four neighbourhood moves over a tour of n >= 4 cities.
void random_move(std::vector<std::size_t>& tour, Rng& rng) {
  const std::size_t n = tour.size();
  switch (rng.below(4)) {
    case 0: {  // swap two cities
      const std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      std::swap(tour[i], tour[j]);
      break;
    }
    case 1: {  // invert a subroute
      std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      if (i > j) std::swap(i, j);
      std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(i),
                   tour.begin() + static_cast<std::ptrdiff_t>(j) + 1);
      break;
    }
    case 2: {  // relocate one city
      const std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      const std::size_t city = tour[i];
      tour.erase(tour.begin() + static_cast<std::ptrdiff_t>(i));
      tour.insert(tour.begin() + static_cast<std::ptrdiff_t>(j), city);
      break;
    }
    default: {  // relocate a subroute
      const std::size_t len = 1 + rng.below(n - 1);
      const std::size_t i = rng.below(n - len + 1);
      std::size_t k = rng.below(n - len);
      if (k >= i) ++k;
      std::vector<std::size_t> segment(tour.begin() + static_cast<std::ptrdiff_t>(i),
                                       tour.begin() + static_cast<std::ptrdiff_t>(i + len));
      tour.erase(tour.begin() + static_cast<std::ptrdiff_t>(i),
                 tour.begin() + static_cast<std::ptrdiff_t>(i + len));
      tour.insert(tour.begin() + static_cast<std::ptrdiff_t>(k), segment.begin(), segment.end());
      break;
    }
  }
}

std::vector<GeoPoint> locations_of(std::span<const PoiId> ids, const PoiStore& store) {
  std::vector<GeoPoint> out;
  out.reserve(ids.size());
  for (PoiId id : ids) out.push_back(store.at(id).location);
  return out;
}

// Splits clusters the exact solver cannot take, halving tau each round.
void split_oversized(const std::vector<PoiId>& members, const PoiStore& store, double tau,
                     std::size_t max_n, std::vector<std::vector<PoiId>>& out) {
  if (members.size() <= max_n) {
    out.push_back(members);
    return;
  }
  std::vector<ScoredPlace> places;
  for (PoiId id : members) places.push_back({id, store.at(id).location, 0.0});
  const double half = tau / 2.0;
  auto parts = extract_sorted(sorted_places(places), half);
  if (parts.size() == 1) {
    // Every pair is closer than any threshold we could still try; cut by id.
    for (std::size_t i = 0; i < members.size(); i += max_n) {
      const auto stop = std::min(members.size(), i + max_n);
      out.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(i),
                       members.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return;
  }
  for (const auto& part : parts) split_oversized(part.member_ids, store, half, max_n, out);
}

std::size_t argmin_distance(std::span<const std::size_t> members, std::span<const GeoPoint> points,
                            const GeoPoint& target, std::optional<std::size_t> exclude) {
  std::optional<std::size_t> best;
  double best_d = kInf;
  for (std::size_t m : members) {
    if (exclude && m == *exclude) continue;
    const double d = haversine_distance(points[m], target);
    if (!best || d < best_d || (d == best_d && m < *best)) {
      best = m;
      best_d = d;
    }
  }
  return *best;
}

std::size_t argmax_distance(std::span<const std::size_t> members, std::span<const GeoPoint> points,
                            const GeoPoint& target, std::optional<std::size_t> exclude) {
  std::optional<std::size_t> best;
  double best_d = -1.0;
  for (std::size_t m : members) {
    if (exclude && m == *exclude) continue;
    const double d = haversine_distance(points[m], target);
    if (!best || d > best_d || (d == best_d && m < *best)) {
      best = m;
      best_d = d;
    }
  }
  return *best;
}

}  // namespace

// ---------------------------------------------------------------- clustering

std::vector<std::pair<PoiId, PoiId>> ProximityGraph::edges() const {
  std::vector<std::pair<PoiId, PoiId>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (adjacent[i][j]) out.emplace_back(std::min(nodes[i], nodes[j]), std::max(nodes[i], nodes[j]));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ProximityGraph build_proximity_graph(std::span<const ScoredPlace> places, double tau) {
  check_tau(tau);
  ProximityGraph g;
  g.tau = tau;
  for (const auto& p : places) g.nodes.push_back(p.id);
  g.adjacent = adjacency(places, tau);
  return g;
}

std::vector<std::size_t> maximum_clique(const std::vector<std::vector<bool>>& adjacent,
                                        std::span<const double> weights,
                                        const std::vector<bool>& alive) {
  if (weights.size() != adjacent.size() || alive.size() != adjacent.size()) {
    throw std::invalid_argument("maximum_clique: size mismatch");
  }
  CliqueSearch search(adjacent, weights);
  return search.run(alive);
}

std::vector<Cluster> extract_clusters(std::span<const ScoredPlace> places, double tau) {
  check_tau(tau);
  return extract_sorted(sorted_places(places), tau);
}

ClusterSelection cluster_and_select(std::span<const ScoredPlace> places, double tau,
                                    std::size_t n_candidates) {
  if (places.empty()) throw std::invalid_argument("no places to cluster");
  if (n_candidates == 0) throw std::invalid_argument("candidate count must be at least 1");
  ClusterSelection out;
  out.clusters = extract_clusters(places, tau);

  std::vector<std::size_t> by_score(out.clusters.size());
  std::iota(by_score.begin(), by_score.end(), 0);
  std::stable_sort(by_score.begin(), by_score.end(), [&](std::size_t a, std::size_t b) {
    return out.clusters[a].summed_score > out.clusters[b].summed_score;
  });
  for (std::size_t c : by_score) {
    if (out.candidates.size() >= n_candidates) break;
    out.selected.push_back(c);
    const auto& members = out.clusters[c].member_ids;
    out.candidates.insert(out.candidates.end(), members.begin(), members.end());
  }
  return out;
}

// ---------------------------------------------------------------- solvers

double tour_cost(const DistanceMatrix& d, std::span<const std::size_t> order) {
  if (order.size() < 2) return 0.0;
  double total = path_cost(d, order);
  total += d(order.back(), order.front());
  return total;
}

double path_cost(const DistanceMatrix& d, std::span<const std::size_t> order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += d(order[i - 1], order[i]);
  return total;
}

void SAParams::validate() const {
  if (!(std::isfinite(t_init) && std::isfinite(t_min) && t_min >= 0.0 && t_init > t_min)) {
    throw std::invalid_argument("SA temperatures must satisfy t_init > t_min >= 0");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("SA alpha must be in (0, 1)");
}

TourSolution solve_tsp_sa(const DistanceMatrix& d, const SAParams& params, SAStats* stats) {
  params.validate();
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("empty distance matrix");
  Rng rng(params.seed);
  std::vector<std::size_t> current(n);
  std::iota(current.begin(), current.end(), 0);
  rng.shuffle(std::span<std::size_t>(current));
  double current_cost = tour_cost(d, current);

  SAStats local;
  local.initial_cost = current_cost;
  TourSolution best{current, current_cost};

  if (n > 3) {
    double t = params.t_init;
    std::vector<std::size_t> candidate;
    while (t > params.t_min && local.iterations < params.max_iters) {
      candidate = current;
      random_move(candidate, rng);
      const double candidate_cost = tour_cost(d, candidate);
      const double delta = candidate_cost - current_cost;
      if (delta < 0.0 || std::exp(-delta / t) > rng.uniform01()) {
        current.swap(candidate);
        current_cost = candidate_cost;
        ++local.accepted;
        if (current_cost < best.cost) best = {current, current_cost};
      }
      t *= params.alpha;
      ++local.iterations;
    }
  }
  if (stats) *stats = local;
  return best;
}

TourSolution solve_path_fixed_endpoints(const DistanceMatrix& d, std::size_t start,
                                        std::size_t end, std::size_t max_n) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("empty distance matrix");
  if (start >= n || end >= n) throw std::invalid_argument("endpoint out of range");
  if (n == 1) return {{0}, 0.0};
  if (start == end) throw std::invalid_argument("start and end must differ");
  if (n > max_n) throw Error("cluster too large for exact solve");

  std::vector<std::size_t> mids;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != start && i != end) mids.push_back(i);
  }
  const std::size_t m = mids.size();
  if (m == 0) return {{start, end}, d(start, end)};

  // f[mask * m + v]: cheapest path from mids[v] through every mid in mask
  // (v included) to end.
  const std::size_t full = (std::size_t{1} << m) - 1;
  std::vector<double> f((full + 1) * m, kInf);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t v = 0; v < m; ++v) {
      if (!(mask >> v & 1)) continue;
      const std::size_t rest = mask & ~(std::size_t{1} << v);
      if (rest == 0) {
        f[mask * m + v] = d(mids[v], end);
        continue;
      }
      double best = kInf;
      for (std::size_t u = 0; u < m; ++u) {
        if (!(rest >> u & 1)) continue;
        best = std::min(best, d(mids[v], mids[u]) + f[rest * m + u]);
      }
      f[mask * m + v] = best;
    }
  }

  double optimum = kInf;
  for (std::size_t v = 0; v < m; ++v) optimum = std::min(optimum, d(start, mids[v]) + f[full * m + v]);

  // Lexicographically smallest optimal order: take the smallest index whose
  // completion still attains the optimum.
  const double eps = 1e-9 * std::max(1.0, optimum);
  std::vector<std::size_t> order{start};
  std::size_t mask = full;
  std::size_t cur = start;
  double remaining = optimum;
  while (mask != 0) {
    bool chosen = false;
    for (std::size_t v = 0; v < m && !chosen; ++v) {
      if (!(mask >> v & 1)) continue;
      if (d(cur, mids[v]) + f[mask * m + v] <= remaining + eps) {
        order.push_back(mids[v]);
        remaining = f[mask * m + v];
        cur = mids[v];
        mask &= ~(std::size_t{1} << v);
        chosen = true;
      }
    }
    if (!chosen) throw Error("internal: path reconstruction failed");
  }
  order.push_back(end);
  return {order, path_cost(d, order)};
}

TourSolution solve_open_path_exact(const DistanceMatrix& d, std::size_t max_n) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("empty distance matrix");
  if (n > max_n) throw Error("too many points for exact open path");
  if (n == 1) return {{0}, 0.0};

  const std::size_t full = (std::size_t{1} << n) - 1;
  // g[mask * n + v]: cheapest path covering mask and ending at v.
  std::vector<double> g((full + 1) * n, kInf);
  for (std::size_t v = 0; v < n; ++v) g[(std::size_t{1} << v) * n + v] = 0.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t v = 0; v < n; ++v) {
      const double base = g[mask * n + v];
      if (!(mask >> v & 1) || base == kInf) continue;
      for (std::size_t u = 0; u < n; ++u) {
        if (mask >> u & 1) continue;
        const std::size_t next = mask | (std::size_t{1} << u);
        g[next * n + u] = std::min(g[next * n + u], base + d(v, u));
      }
    }
  }
  std::size_t last = 0;
  for (std::size_t v = 1; v < n; ++v) {
    if (g[full * n + v] < g[full * n + last]) last = v;
  }
  std::vector<std::size_t> order{last};
  std::size_t mask = full;
  std::size_t cur = last;
  while (mask != (std::size_t{1} << cur)) {
    const std::size_t prev_mask = mask & ~(std::size_t{1} << cur);
    std::size_t pick = n;
    double best = kInf;
    for (std::size_t u = 0; u < n; ++u) {
      if (!(prev_mask >> u & 1)) continue;
      const double c = g[prev_mask * n + u] + d(u, cur);
      if (c < best) {
        best = c;
        pick = u;
      }
    }
    order.push_back(pick);
    mask = prev_mask;
    cur = pick;
  }
  std::reverse(order.begin(), order.end());
  return {order, path_cost(d, order)};
}

TourSolution solve_open_path_sa(const DistanceMatrix& d, SAParams params, std::size_t seeds) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("empty distance matrix");
  if (seeds == 0) throw std::invalid_argument("seed count must be at least 1");
  if (n <= 2) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    return {order, path_cost(d, order)};
  }
  // A dummy city at zero distance from everything turns the best closed tour
  // into the best open path.
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rows[i][j] = d(i, j);
  }
  const auto augmented = DistanceMatrix::from_rows(rows);
  const std::uint64_t base_seed = params.seed;
  TourSolution best;
  best.cost = kInf;
  for (std::size_t s = 0; s < seeds; ++s) {
    params.seed = base_seed + s;
    const auto tour = solve_tsp_sa(augmented, params);
    const auto dummy = std::find(tour.order.begin(), tour.order.end(), n);
    std::vector<std::size_t> path(dummy + 1, tour.order.end());
    path.insert(path.end(), tour.order.begin(), dummy);
    const double cost = path_cost(d, path);
    if (cost < best.cost) best = {path, cost};
  }
  return best;
}

// ---------------------------------------------------------------- ordering

ClusterEndpoints get_cluster_endpoints(std::span<const std::size_t> members,
                                       std::span<const GeoPoint> points,
                                       std::optional<GeoPoint> prev_anchor,
                                       std::optional<GeoPoint> next_centroid,
                                       const DistanceMatrix& d) {
  if (members.empty()) throw std::invalid_argument("empty cluster");
  for (std::size_t m : members) {
    if (m >= points.size() || m >= d.size()) throw std::invalid_argument("member out of range");
  }
  if (members.size() == 1) return {members[0], members[0]};

  if (!prev_anchor && !next_centroid) {
    ClusterEndpoints best{members[0], members[1]};
    double best_d = -1.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const std::size_t i = std::min(members[a], members[b]);
        const std::size_t j = std::max(members[a], members[b]);
        const double dist = d(i, j);
        if (dist > best_d || (dist == best_d && std::pair(i, j) < std::pair(best.start, best.end))) {
          best = {i, j};
          best_d = dist;
        }
      }
    }
    return best;
  }

  ClusterEndpoints out;
  out.start = prev_anchor ? argmin_distance(members, points, *prev_anchor, std::nullopt)
                          : argmax_distance(members, points, *next_centroid, std::nullopt);
  out.end = next_centroid ? argmin_distance(members, points, *next_centroid, out.start)
                          : argmax_distance(members, points, points[out.start], out.start);
  return out;
}

std::vector<PoiId> reorder_from_start(std::span<const PoiId> order, PoiId start) {
  const auto it = std::find(order.begin(), order.end(), start);
  if (it == order.end()) throw std::invalid_argument("start POI is not in the order");
  std::vector<PoiId> out(it, order.end());
  out.insert(out.end(), order.begin(), it);
  return out;
}

HierarchicalOrder hierarchical_order(const std::vector<Cluster>& clusters,
                                     std::span<const PoiId> candidates, const PoiStore& store,
                                     const OrderingOptions& options) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to order");
  const std::set<PoiId> wanted(candidates.begin(), candidates.end());
  if (wanted.size() != candidates.size()) throw std::invalid_argument("duplicate candidate id");

  // Candidate members of each cluster, oversized ones split.
  std::vector<std::vector<PoiId>> groups;
  std::set<PoiId> covered;
  for (const auto& c : clusters) {
    std::vector<PoiId> members;
    for (PoiId id : c.member_ids) {
      if (wanted.count(id) && covered.insert(id).second) members.push_back(id);
    }
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    split_oversized(members, store, options.tau_meters, options.exact_max_n, groups);
  }
  if (covered.size() != wanted.size()) throw std::invalid_argument("clusters do not cover candidates");

  // Points indexed by ascending candidate id.
  const std::vector<PoiId> ids(wanted.begin(), wanted.end());
  std::map<PoiId, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  const auto points = locations_of(ids, store);
  const auto d = build_distance_matrix(points);

  std::vector<GeoPoint> centroids;
  for (const auto& g : groups) {
    const auto locs = locations_of(g, store);
    centroids.push_back(centroid(locs));
  }

  // Cluster-level closed tour, opened at its longest edge.
  std::vector<std::size_t> tour(groups.size());
  std::iota(tour.begin(), tour.end(), 0);
  if (groups.size() > 1) {
    tour = solve_tsp_sa(build_distance_matrix(centroids), options.sa).order;
    const std::size_t k = tour.size();
    std::size_t cut = 0;  // edge tour[cut] -> tour[cut + 1]
    double longest = -1.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double len = haversine_distance(centroids[tour[i]], centroids[tour[(i + 1) % k]]);
      if (len > longest) {
        longest = len;
        cut = i;
      }
    }
    std::rotate(tour.begin(), tour.begin() + static_cast<std::ptrdiff_t>((cut + 1) % k), tour.end());
  }

  HierarchicalOrder out;
  std::optional<GeoPoint> prev_anchor;
  for (std::size_t pos = 0; pos < tour.size(); ++pos) {
    const auto& group = groups[tour[pos]];
    std::vector<std::size_t> members;
    for (PoiId id : group) members.push_back(index.at(id));
    std::optional<GeoPoint> next_centroid;
    if (pos + 1 < tour.size()) next_centroid = centroids[tour[pos + 1]];

    const auto ends = get_cluster_endpoints(members, points, prev_anchor, next_centroid, d);
    std::vector<PoiId> block;
    if (members.size() == 1) {
      block.push_back(ids[members[0]]);
    } else {
      const auto sub = d.subset(members);
      const auto local_of = [&](std::size_t global) {
        return static_cast<std::size_t>(std::find(members.begin(), members.end(), global) -
                                        members.begin());
      };
      const auto path = solve_path_fixed_endpoints(sub, local_of(ends.start), local_of(ends.end),
                                                   options.exact_max_n);
      for (std::size_t local : path.order) block.push_back(ids[members[local]]);
    }
    prev_anchor = store.at(block.back()).location;
    out.order.insert(out.order.end(), block.begin(), block.end());
    out.blocks.push_back(std::move(block));
  }
  return out;
}

std::string candidate_line(const Poi& poi) {
  std::string rating = format_double(poi.rating);
  if (rating.find_first_of(".e") == std::string::npos) rating += ".0";
  return "[id=" + std::to_string(poi.id) + "] " + poi.name + " (" +
         std::string(to_string(poi.category)) + ", rating " + rating + ")";
}

StartSelection select_start(std::span<const PoiId> order, const PoiStore& store,
                            const Decomposition& decomposition, LlmGateway* gateway,
                            const PromptLibrary& prompts, const OrderingOptions& options) {
  if (order.empty()) throw std::invalid_argument("no candidates to start from");
  const std::set<PoiId> allowed(order.begin(), order.end());
  StartSelection out;

  for (const auto& sub : decomposition.subrequests) {
    if (sub.type != SubRequestType::start || sub.pos.empty()) continue;
    if (auto id = resolve_place_name(sub.pos, store, options.fuzzy_threshold);
        id && allowed.count(*id)) {
      out.id = *id;
      out.source = "subrequest";
      return out;
    }
    out.warnings.push_back("start '" + sub.pos + "' is not among the candidates");
  }

  out.id = order.front();
  out.source = "fallback";
  if (!gateway) return out;

  std::string lines;
  for (PoiId id : order) lines += candidate_line(store.at(id)) + "\n";
  const std::string prompt = render_template(
      prompts.text(PromptId::start_poi),
      {{"request", trim(decomposition.raw_request)}, {"candidates", trim(lines)}});
  std::string reply;
  try {
    reply = gateway->chat(ChatRequest{prompt, 0.0, 256, options.model_tag});
  } catch (const std::exception& e) {
    out.warnings.push_back(std::string("start selection unavailable: ") + e.what());
    return out;
  }

  std::optional<PoiId> picked;
  try {
    const auto j = nlohmann::json::parse(strip_code_fences(reply));
    if (j.is_object() && j.contains("start_id") && j.at("start_id").is_number_integer()) {
      picked = j.at("start_id").get<PoiId>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  if (!picked) {
    if (auto num = first_number(reply); num && std::floor(*num) == *num) {
      picked = static_cast<PoiId>(*num);
    }
  }
  if (picked && allowed.count(*picked)) {
    out.id = *picked;
    out.source = "llm";
  } else {
    out.warnings.push_back("start selection reply unusable; starting at the first POI");
  }
  return out;
}

OrderingResult order_pois(const std::vector<Cluster>& clusters,
                          std::span<const PoiId> candidates, const PoiStore& store,
                          const Decomposition& decomposition, LlmGateway* gateway,
                          const PromptLibrary& prompts, const OrderingOptions& options) {
  auto h = hierarchical_order(clusters, candidates, store, options);
  OrderingResult out;
  out.start = select_start(h.order, store, decomposition, gateway, prompts, options);
  out.order = reorder_from_start(h.order, out.start.id);
  out.blocks = std::move(h.blocks);
  return out;
}

}  // namespace citywalk
