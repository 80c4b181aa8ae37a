#pragma once

// Slow, independent reference implementations used to check the library.

#include <cstddef>
#include <vector>

#include "citywalk/decompose.hpp"
#include "citywalk/geo.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/random.hpp"
#include "citywalk/retrieval.hpp"

namespace citywalk::testing {

struct OraclePath {
  std::vector<std::size_t> order;
  double cost = 0.0;
};

/// Enumerates every ordering of the interior nodes in lexicographic order;
/// keeps the first ordering whose cost is minimal within a 1e-9 relative band.
OraclePath brute_force_fixed_path(const DistanceMatrix& d, std::size_t start, std::size_t end);

/// Shortest open path with free endpoints by full permutation enumeration.
double brute_force_open_path(const DistanceMatrix& d);

/// Optimal closed tour by forward subset DP rooted at node 0.
double held_karp_tour(const DistanceMatrix& d);

/// Size of a maximum clique by plain branch and bound over vertex order.
std::size_t max_clique_size(const std::vector<std::vector<bool>>& adjacent);

/// Uniform points in a square of `side_m` meters centred near (121.47, 31.23).
std::vector<GeoPoint> random_points(Rng& rng, std::size_t n, double side_m);

/// Scores every stored POI against every subrequest with stub embeddings,
/// sorts, cuts, applies the neg gap and dislike filters, sums and injects
/// must-sees. `must_ids` are the resolved must-see ids in subrequest order.
std::vector<ScoredPoi> oracle_retrieve(const Decomposition& decomposition, const PoiStore& store,
                                       const std::vector<PoiId>& must_ids,
                                       const RetrievalOptions& options, std::size_t dim);

}  // namespace citywalk::testing
