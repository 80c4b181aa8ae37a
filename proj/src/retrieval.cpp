#include "citywalk/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "citywalk/text.hpp"

namespace citywalk {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> cosine_score(std::span<const double> query, const EmbeddingMatrix& matrix) {
  if (matrix.rows() > 0 && query.size() != matrix.dim) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                " does not match matrix dimension " + std::to_string(matrix.dim));
  }
  std::vector<double> scores(matrix.rows(), 0.0);
  const double qn = norm(query);
  if (qn == 0.0) return scores;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    const double rn = norm(row);
    if (rn == 0.0) continue;
    double dot = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) dot += query[c] * row[c];
    scores[r] = dot / (qn * rn);
  }
  return scores;
}

void sort_ranked(std::vector<ScoredPoi>& items) {
  std::sort(items.begin(), items.end(), [](const ScoredPoi& a, const ScoredPoi& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.poi_id < b.poi_id;
  });
}

std::vector<ScoredPoi> rank_by_gap(std::span<const double> pos,
                                   std::optional<std::span<const double>> neg,
                                   const EmbeddingMatrix& matrix, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  const auto pos_scores = cosine_score(pos, matrix);
  std::vector<std::size_t> rows(matrix.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (pos_scores[a] != pos_scores[b]) return pos_scores[a] > pos_scores[b];
    return matrix.ids[a] < matrix.ids[b];
  });
  rows.resize(std::min(k, rows.size()));

  std::vector<ScoredPoi> ranked;
  ranked.reserve(rows.size());
  if (neg) {
    // Score the negative query against the top-k embeddings only.
    EmbeddingMatrix top;
    top.dim = matrix.dim;
    for (std::size_t r : rows) {
      top.ids.push_back(matrix.ids[r]);
      const auto row = matrix.row(r);
      top.data.insert(top.data.end(), row.begin(), row.end());
    }
    const auto neg_scores = cosine_score(*neg, top);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ranked.push_back({matrix.ids[rows[i]], pos_scores[rows[i]] - neg_scores[i]});
    }
  } else {
    for (std::size_t r : rows) ranked.push_back({matrix.ids[r], pos_scores[r]});
  }
  sort_ranked(ranked);
  return ranked;
}

SubrequestRetrieval retrieve_for_subrequest(const SubRequest& sub, const EmbeddingMatrix& matrix,
                                            LlmGateway& gateway, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (matrix.rows() == 0) throw std::invalid_argument("POI store is empty");
  SubrequestRetrieval out;
  if (sub.pos.empty()) {
    out.global_filter = gateway.embed_one(sub.neg);
    return out;
  }
  if (sub.neg.empty()) {
    const auto pos = gateway.embed_one(sub.pos);
    out.ranked = rank_by_gap(pos, std::nullopt, matrix, k);
  } else {
    const auto vecs = gateway.embed({sub.pos, sub.neg});
    out.ranked = rank_by_gap(vecs[0], std::span<const double>(vecs[1]), matrix, k);
  }
  return out;
}

std::map<PoiId, double> filter_penalties(std::span<const double> filter,
                                         const EmbeddingMatrix& matrix) {
  const auto scores = cosine_score(filter, matrix);
  std::map<PoiId, double> out;
  for (std::size_t i = 0; i < matrix.rows(); ++i) out[matrix.ids[i]] = scores[i];
  return out;
}

RetrievalResult fuse(const std::vector<std::vector<ScoredPoi>>& per_subrequest,
                     std::span<const PoiId> mustsee_ids, std::size_t k,
                     const std::vector<std::map<PoiId, double>>& penalties, double mustsee_score) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  RetrievalResult result;
  // Contributions are summed in sorted order so the result does not depend on
  // the order of subrequests.
  std::map<PoiId, std::vector<double>> contributions;
  for (std::size_t i = 0; i < per_subrequest.size(); ++i) {
    result.per_subrequest[i] = per_subrequest[i];
    for (const auto& item : per_subrequest[i]) contributions[item.poi_id].push_back(item.score);
  }
  for (const auto& filter : penalties) {
    for (auto& [id, terms] : contributions) {
      if (auto it = filter.find(id); it != filter.end()) terms.push_back(-it->second);
    }
  }

  std::vector<ScoredPoi> fused;
  fused.reserve(contributions.size());
  for (auto& [id, terms] : contributions) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    fused.push_back({id, total});
  }
  sort_ranked(fused);
  if (fused.size() > k) fused.resize(k);

  std::set<PoiId> seen_must;
  for (PoiId id : mustsee_ids) {
    if (!seen_must.insert(id).second) continue;
    result.mustsee_ids.push_back(id);
    auto it = std::find_if(fused.begin(), fused.end(),
                           [id](const ScoredPoi& s) { return s.poi_id == id; });
    if (it != fused.end()) {
      it->score = mustsee_score;
    } else {
      fused.push_back({id, mustsee_score});
    }
  }
  sort_ranked(fused);
  result.candidates = std::move(fused);
  return result;
}

std::optional<PoiId> resolve_place_name(std::string_view name, const PoiStore& store,
                                        int threshold) {
  const std::string wanted = trim(name);
  if (wanted.empty()) return std::nullopt;
  if (const Poi* exact = store.find_by_name(wanted)) return exact->id;

  std::optional<PoiId> best;
  int best_set = -1;
  double best_plain = -1.0;
  const std::string wanted_lower = to_lower(wanted);
  for (const auto& [id, poi] : store.pois()) {
    const int set_score = token_set_ratio(wanted, poi.name);
    if (set_score < threshold) continue;
    const double plain = fuzzy_ratio(wanted_lower, to_lower(poi.name));
    if (set_score > best_set || (set_score == best_set && plain > best_plain)) {
      best = id;
      best_set = set_score;
      best_plain = plain;
    }
  }
  return best;
}

MustSeeResolution resolve_must_sees(const Decomposition& decomposition, const PoiStore& store,
                                    int threshold) {
  MustSeeResolution out;
  for (const auto& sub : decomposition.subrequests) {
    if (!sub.mustsee) continue;
    if (auto id = resolve_place_name(sub.pos, store, threshold)) {
      if (std::find(out.ids.begin(), out.ids.end(), *id) == out.ids.end()) out.ids.push_back(*id);
    } else {
      out.warnings.push_back("must-see '" + sub.pos + "' does not match any stored POI");
    }
  }
  return out;
}

RetrievalResult retrieve(const Decomposition& decomposition, const PoiStore& store,
                         LlmGateway& gateway, const RetrievalOptions& options) {
  const auto matrix = store.embeddings_matrix(gateway.embed_model());
  std::vector<std::vector<ScoredPoi>> lists;
  std::vector<std::map<PoiId, double>> penalties;
  for (const auto& sub : decomposition.subrequests) {
    auto r = retrieve_for_subrequest(sub, matrix, gateway, options.k_per_subrequest);
    if (r.global_filter) penalties.push_back(filter_penalties(*r.global_filter, matrix));
    lists.push_back(std::move(r.ranked));
  }
  const auto must = resolve_must_sees(decomposition, store, options.fuzzy_threshold);
  auto result = fuse(lists, must.ids, options.final_k, penalties, options.mustsee_score);
  result.warnings.insert(result.warnings.end(), must.warnings.begin(), must.warnings.end());
  return result;
}

}  // namespace citywalk
