#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "citywalk/geo.hpp"
#include "json.hpp"

namespace citywalk {

using PoiId = std::int64_t;

enum class Category { site, restaurant, entertainment, shop, nature, other };

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

struct Poi {
  PoiId id = 0;  // 0 asks the store to assign the next free id
  std::string name;
  std::string address;
  std::string city;
  std::string description;
  GeoPoint location{0.0, 0.0};
  double rating = 0.0;
  Category category = Category::other;
  std::string context;  // derived by the store, see make_context

  friend bool operator==(const Poi&, const Poi&) = default;
};

/// File record form: every field except the derived context.
nlohmann::json poi_to_json(const Poi& poi);
/// Throws ParseError on a missing key or bad category and
/// std::invalid_argument on out-of-range coordinates.
Poi poi_from_json(const nlohmann::json& j);

/// "name; address; city; description; rating: X; category: Y"
std::string make_context(const Poi& poi);

/// Row-major N x d view of the embeddings of one model tag, rows sorted by id.
struct EmbeddingMatrix {
  std::vector<PoiId> ids;
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t rows() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

/// User-owned POI database plus its embedding records. Value type; not
/// synchronized (see SharedPoiStore).
class PoiStore {
 public:
  explicit PoiStore(std::size_t embedding_dim = 0) : dim_(embedding_dim) {}

  /// Inserts or replaces by id, regenerating the context and dropping every
  /// embedding record of that id. Throws StoreError("duplicate POI ...") when
  /// another id has the same name and address in the same city, unless
  /// `force` is set.
  PoiId upsert(Poi poi, bool force = false);

  const Poi* find(PoiId id) const;
  const Poi& at(PoiId id) const;
  /// Case-insensitive exact match on name (and city, when non-empty).
  const Poi* find_by_name(std::string_view name, std::string_view city = {}) const;
  const std::map<PoiId, Poi>& pois() const { return pois_; }
  /// POIs (and their embeddings) whose city matches case-insensitively.
  PoiStore subset_city(std::string_view city) const;
  /// Distinct city names, sorted.
  std::vector<std::string> cities() const;
  std::size_t size() const { return pois_.size(); }
  bool empty() const { return pois_.empty(); }

  /// Sets the store-wide dimension on first use; later vectors must match.
  void set_embedding(PoiId id, const std::string& model_tag, std::vector<double> vector);
  const std::vector<double>* embedding(PoiId id, const std::string& model_tag) const;
  std::vector<PoiId> missing_embeddings(const std::string& model_tag) const;
  std::size_t embedding_dim() const { return dim_; }
  std::size_t embedding_count() const { return embeddings_.size(); }

  /// Throws StoreError listing the ids that lack a current record.
  EmbeddingMatrix embeddings_matrix(const std::string& model_tag) const;

  /// Writes `path` (one JSON object per line) and the `path.emb` sidecar.
  void save(const std::filesystem::path& path) const;
  /// Reads `path` and, when present, `path.emb`. Throws ParseError naming the
  /// offending line and record.
  static PoiStore load(const std::filesystem::path& path);

  friend bool operator==(const PoiStore&, const PoiStore&) = default;

 private:
  std::map<PoiId, Poi> pois_;
  std::map<std::pair<PoiId, std::string>, std::vector<double>> embeddings_;
  std::size_t dim_ = 0;
};

std::filesystem::path embedding_sidecar_path(const std::filesystem::path& poi_path);

/// Copy-on-write holder giving readers immutable snapshots while writers are
/// serialized.
class SharedPoiStore {
 public:
  explicit SharedPoiStore(PoiStore store = PoiStore())
      : current_(std::make_shared<const PoiStore>(std::move(store))) {}
  SharedPoiStore(SharedPoiStore&& other) noexcept : current_(other.snapshot()) {}
  SharedPoiStore& operator=(SharedPoiStore&& other) {
    auto next = other.snapshot();
    std::lock_guard writer(write_mutex_);
    std::lock_guard lock(read_mutex_);
    current_ = std::move(next);
    return *this;
  }

  std::shared_ptr<const PoiStore> snapshot() const {
    std::lock_guard lock(read_mutex_);
    return current_;
  }

  template <typename Fn>
  auto mutate(Fn&& fn) {
    std::lock_guard writer(write_mutex_);
    auto next = std::make_shared<PoiStore>(*snapshot());
    if constexpr (std::is_void_v<decltype(fn(*next))>) {
      fn(*next);
      publish(std::move(next));
    } else {
      auto result = fn(*next);
      publish(std::move(next));
      return result;
    }
  }

 private:
  void publish(std::shared_ptr<PoiStore> next) {
    std::lock_guard lock(read_mutex_);
    current_ = std::move(next);
  }

  mutable std::mutex read_mutex_;
  std::mutex write_mutex_;
  std::shared_ptr<const PoiStore> current_;
};

struct GroundTruthItinerary {
  std::string user_request;
  std::vector<PoiId> poi_ids;

  friend bool operator==(const GroundTruthItinerary&, const GroundTruthItinerary&) = default;
};

/// One record per line: request, a TAB, then comma-separated POI ids.
std::vector<GroundTruthItinerary> load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const std::filesystem::path& path,
                       std::span<const GroundTruthItinerary> records);
/// Throws StoreError naming the first id that does not resolve in `store`.
void validate_ground_truth(std::span<const GroundTruthItinerary> records, const PoiStore& store);

}  // namespace citywalk
