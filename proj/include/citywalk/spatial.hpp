#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "citywalk/decompose.hpp"
#include "citywalk/geo.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"

namespace citywalk {

// ---------------------------------------------------------------- clustering

/// A retrieved POI as seen by the clustering step.
struct ScoredPlace {
  PoiId id = 0;
  GeoPoint location{0.0, 0.0};
  double score = 0.0;
};

/// Undirected graph with an edge between two distinct places closer than tau.
struct ProximityGraph {
  std::vector<PoiId> nodes;                      // input order
  std::vector<std::vector<bool>> adjacent;       // indexed like nodes
  double tau = 0.0;

  std::vector<std::pair<PoiId, PoiId>> edges() const;
};

ProximityGraph build_proximity_graph(std::span<const ScoredPlace> places, double tau);

struct Cluster {
  std::vector<PoiId> member_ids;  // ascending
  double summed_score = 0.0;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Indices of a maximum clique of `adjacent`, restricted to `alive` nodes.
/// Among maximum cliques the one with the larger weight sum wins, then the
/// one whose smallest index is smaller. Bron-Kerbosch with pivoting.
std::vector<std::size_t> maximum_clique(const std::vector<std::vector<bool>>& adjacent,
                                        std::span<const double> weights,
                                        const std::vector<bool>& alive);

/// Repeatedly removes the largest clique of the tau-graph until no node is
/// left. Clusters come out in extraction order.
std::vector<Cluster> extract_clusters(std::span<const ScoredPlace> places, double tau);

struct ClusterSelection {
  std::vector<Cluster> clusters;   // every cluster, extraction order
  std::vector<PoiId> candidates;   // members of the selected clusters
  std::vector<std::size_t> selected;  // indices into clusters, selection order
};

/// Clusters the places, then takes whole clusters by descending summed score
/// until at least `n_candidates` POIs are selected (overshoot allowed).
ClusterSelection cluster_and_select(std::span<const ScoredPlace> places, double tau,
                                    std::size_t n_candidates);

// ---------------------------------------------------------------- solvers

struct TourSolution {
  std::vector<std::size_t> order;
  double cost = 0.0;
};

/// Closed-tour length (includes the edge back to the first city).
double tour_cost(const DistanceMatrix& d, std::span<const std::size_t> order);
/// Open-path length.
double path_cost(const DistanceMatrix& d, std::span<const std::size_t> order);

struct SAParams {
  double t_init = 5000.0;
  double t_min = 1e-3;
  double alpha = 0.99;
  std::size_t max_iters = 200'000;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless t_init > t_min >= 0 and 0 < alpha < 1.
  void validate() const;
};

struct SAStats {
  double initial_cost = 0.0;
  std::size_t iterations = 0;
  std::size_t accepted = 0;
};

/// Simulated annealing over closed tours with four neighbourhood moves (swap,
/// subroute inversion, city relocation, subroute relocation) and geometric
/// cooling. Deterministic for a given seed; returns the best tour seen.
TourSolution solve_tsp_sa(const DistanceMatrix& d, const SAParams& params,
                          SAStats* stats = nullptr);

inline constexpr std::size_t kDefaultExactMaxN = 18;

/// Minimum-cost Hamiltonian path from `start` to `end` by subset dynamic
/// programming. Among equal-cost paths the lexicographically smallest order
/// is returned. Throws std::invalid_argument for start == end (n > 1) and
/// Error("cluster too large for exact solve") for n > max_n.
TourSolution solve_path_fixed_endpoints(const DistanceMatrix& d, std::size_t start,
                                        std::size_t end,
                                        std::size_t max_n = kDefaultExactMaxN);

/// Minimum-cost Hamiltonian path with free endpoints, exact. n <= max_n.
TourSolution solve_open_path_exact(const DistanceMatrix& d, std::size_t max_n = 15);

/// Open path via annealing on the matrix augmented with a zero-cost dummy
/// city; best over `seeds` runs.
TourSolution solve_open_path_sa(const DistanceMatrix& d, SAParams params, std::size_t seeds);

// ---------------------------------------------------------------- ordering

struct ClusterEndpoints {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const ClusterEndpoints&, const ClusterEndpoints&) = default;
};

/// Entry and exit member of a cluster. `members` index into `points` and `d`.
///   start: closest to prev_anchor; without one, farthest from next_centroid.
///   end:   closest to next_centroid (excluding start); without one, farthest
///          from start.
/// With neither anchor, the two ends of the cluster's diameter. Ties go to
/// the smaller index.
ClusterEndpoints get_cluster_endpoints(std::span<const std::size_t> members,
                                       std::span<const GeoPoint> points,
                                       std::optional<GeoPoint> prev_anchor,
                                       std::optional<GeoPoint> next_centroid,
                                       const DistanceMatrix& d);

/// Rotates the order, read as a closed cycle, so `start` comes first.
/// Throws std::invalid_argument when `start` is absent.
std::vector<PoiId> reorder_from_start(std::span<const PoiId> order, PoiId start);

struct OrderingOptions {
  SAParams sa;
  std::size_t exact_max_n = kDefaultExactMaxN;
  double tau_meters = 1000.0;
  int fuzzy_threshold = 80;
  std::string model_tag = "fast";
};

struct HierarchicalOrder {
  std::vector<PoiId> order;
  std::vector<std::vector<PoiId>> blocks;  // one per (possibly split) cluster, visit order
};

/// Cluster tour over centroids, then exact endpoint-constrained paths inside
/// each cluster. Clusters larger than exact_max_n are split by re-clustering
/// at half the threshold. Only candidate members are ordered.
HierarchicalOrder hierarchical_order(const std::vector<Cluster>& clusters,
                                     std::span<const PoiId> candidates, const PoiStore& store,
                                     const OrderingOptions& options);

struct StartSelection {
  PoiId id = 0;
  std::string source;  // "subrequest", "llm" or "fallback"
  std::vector<std::string> warnings;
};

/// Start POI from a start-type subrequest when it resolves to a candidate,
/// otherwise asked of the LLM; falls back to the first POI of `order`.
StartSelection select_start(std::span<const PoiId> order, const PoiStore& store,
                            const Decomposition& decomposition, LlmGateway* gateway,
                            const PromptLibrary& prompts, const OrderingOptions& options);

struct OrderingResult {
  std::vector<PoiId> order;
  std::vector<std::vector<PoiId>> blocks;
  StartSelection start;
};

OrderingResult order_pois(const std::vector<Cluster>& clusters,
                          std::span<const PoiId> candidates, const PoiStore& store,
                          const Decomposition& decomposition, LlmGateway* gateway,
                          const PromptLibrary& prompts, const OrderingOptions& options);

/// Candidate line used in prompts: "[id=12] The Bund (site, rating 5.0)".
std::string candidate_line(const Poi& poi);

}  // namespace citywalk
