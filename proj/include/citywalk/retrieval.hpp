#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citywalk/decompose.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"

namespace citywalk {

struct ScoredPoi {
  PoiId poi_id = 0;
  double score = 0.0;
  friend bool operator==(const ScoredPoi&, const ScoredPoi&) = default;
};

struct RetrievalResult {
  std::vector<ScoredPoi> candidates;  // score descending, ties by ascending id
  std::map<std::size_t, std::vector<ScoredPoi>> per_subrequest;
  std::vector<PoiId> mustsee_ids;
  std::vector<std::string> warnings;
};

struct RetrievalOptions {
  std::size_t k_per_subrequest = 30;
  std::size_t final_k = 30;
  double mustsee_score = 1e6;
  int fuzzy_threshold = 80;
};

/// Cosine similarity of `query` against every row; zero-norm rows (or a zero
/// query) score 0. Throws std::invalid_argument on dimension mismatch.
std::vector<double> cosine_score(std::span<const double> query, const EmbeddingMatrix& matrix);

/// Sorts by score descending, ties by ascending id.
void sort_ranked(std::vector<ScoredPoi>& items);

/// Top-k rows by similarity to `pos`, then reranked by the gap between the
/// positive and negative similarity. An absent `neg` contributes zero.
std::vector<ScoredPoi> rank_by_gap(std::span<const double> pos,
                                   std::optional<std::span<const double>> neg,
                                   const EmbeddingMatrix& matrix, std::size_t k);

struct SubrequestRetrieval {
  std::vector<ScoredPoi> ranked;
  /// Set for dislike-only subrequests: the neg embedding, applied by fuse as
  /// a subtractive filter over every candidate.
  std::optional<std::vector<double>> global_filter;
};

SubrequestRetrieval retrieve_for_subrequest(const SubRequest& sub, const EmbeddingMatrix& matrix,
                                            LlmGateway& gateway, std::size_t k);

/// Cosine of a filter embedding against every stored POI, keyed by id.
std::map<PoiId, double> filter_penalties(std::span<const double> filter,
                                         const EmbeddingMatrix& matrix);

/// Sums scores per POI across subrequests, subtracts the filter penalties,
/// keeps the top k and adds the must-see POIs with `mustsee_score`.
RetrievalResult fuse(const std::vector<std::vector<ScoredPoi>>& per_subrequest,
                     std::span<const PoiId> mustsee_ids, std::size_t k,
                     const std::vector<std::map<PoiId, double>>& penalties = {},
                     double mustsee_score = 1e6);

/// Place-name lookup: exact case-insensitive name, else the best token-set
/// match at or above `threshold`.
std::optional<PoiId> resolve_place_name(std::string_view name, const PoiStore& store,
                                        int threshold = 80);

struct MustSeeResolution {
  std::vector<PoiId> ids;
  std::vector<std::string> warnings;
};

/// Resolves every must-see subrequest by name. Unresolved names produce a
/// warning, never an error.
MustSeeResolution resolve_must_sees(const Decomposition& decomposition, const PoiStore& store,
                                    int threshold = 80);

/// Full preference-aware retrieval over a decomposition.
RetrievalResult retrieve(const Decomposition& decomposition, const PoiStore& store,
                         LlmGateway& gateway, const RetrievalOptions& options = {});

}  // namespace citywalk
