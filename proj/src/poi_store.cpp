#include "citywalk/poi_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "citywalk/errors.hpp"
#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::site, "site"},       {Category::restaurant, "restaurant"},
    {Category::entertainment, "entertainment"}, {Category::shop, "shop"},
    {Category::nature, "nature"},   {Category::other, "other"},
};

std::string format_rating(double rating) {
  std::string s = format_double(rating);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void validate_poi(const Poi& poi) {
  if (trim(poi.name).empty()) throw std::invalid_argument("POI name must not be empty");
  if (!std::isfinite(poi.rating) || poi.rating < 0.0 || poi.rating > 5.0) {
    throw std::invalid_argument("POI rating must be in [0, 5]: " + poi.name);
  }
}

bool same_place(const Poi& a, const Poi& b) {
  return to_lower(trim(a.name)) == to_lower(trim(b.name)) &&
         to_lower(trim(a.address)) == to_lower(trim(b.address)) &&
         to_lower(trim(a.city)) == to_lower(trim(b.city));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw StoreError("write failed: " + path.string());
}

}  // namespace

json poi_to_json(const Poi& poi) {
  return json{{"id", poi.id},
              {"name", poi.name},
              {"address", poi.address},
              {"city", poi.city},
              {"description", poi.description},
              {"longitude", poi.location.longitude()},
              {"latitude", poi.location.latitude()},
              {"rating", poi.rating},
              {"category", to_string(poi.category)}};
}

Poi poi_from_json(const json& j) {
  static constexpr const char* kRequired[] = {"id",        "name",     "address", "city",
                                              "description", "longitude", "latitude", "rating",
                                              "category"};
  for (const char* key : kRequired) {
    if (!j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  }
  Poi poi;
  poi.id = j.at("id").get<PoiId>();
  poi.name = j.at("name").get<std::string>();
  poi.address = j.at("address").get<std::string>();
  poi.city = j.at("city").get<std::string>();
  poi.description = j.at("description").get<std::string>();
  poi.location = GeoPoint(j.at("longitude").get<double>(), j.at("latitude").get<double>());
  poi.rating = j.at("rating").get<double>();
  const auto cat = j.at("category").get<std::string>();
  const auto parsed = parse_category(cat);
  if (!parsed) throw ParseError("unknown category '" + cat + "'");
  poi.category = *parsed;
  return poi;
}

std::string_view to_string(Category category) {
  for (const auto& [c, name] : kCategoryNames) {
    if (c == category) return name;
  }
  return "other";
}

std::optional<Category> parse_category(std::string_view text) {
  const std::string lowered = to_lower(trim(text));
  for (const auto& [c, name] : kCategoryNames) {
    if (lowered == name) return c;
  }
  return std::nullopt;
}

std::string make_context(const Poi& poi) {
  return poi.name + "; " + poi.address + "; " + poi.city + "; " + poi.description +
         "; rating: " + format_rating(poi.rating) + "; category: " +
         std::string(to_string(poi.category));
}

PoiId PoiStore::upsert(Poi poi, bool force) {
  validate_poi(poi);
  if (poi.id < 0) throw std::invalid_argument("POI id must be positive");
  if (poi.id == 0) poi.id = pois_.empty() ? 1 : pois_.rbegin()->first + 1;
  if (!force) {
    for (const auto& [id, existing] : pois_) {
      if (id != poi.id && same_place(existing, poi)) {
        throw StoreError("duplicate POI: '" + poi.name + "' in " + poi.city +
                         " already stored as id " + std::to_string(id));
      }
    }
  }
  poi.context = make_context(poi);
  const PoiId id = poi.id;
  for (auto it = embeddings_.lower_bound({id, std::string()});
       it != embeddings_.end() && it->first.first == id;) {
    it = embeddings_.erase(it);
  }
  pois_.insert_or_assign(id, std::move(poi));
  return id;
}

const Poi* PoiStore::find(PoiId id) const {
  auto it = pois_.find(id);
  return it == pois_.end() ? nullptr : &it->second;
}

const Poi& PoiStore::at(PoiId id) const {
  if (const Poi* p = find(id)) return *p;
  throw StoreError("unknown POI id " + std::to_string(id));
}

const Poi* PoiStore::find_by_name(std::string_view name, std::string_view city) const {
  const std::string wanted = to_lower(trim(name));
  const std::string wanted_city = to_lower(trim(city));
  for (const auto& [id, poi] : pois_) {
    if (to_lower(trim(poi.name)) != wanted) continue;
    if (!wanted_city.empty() && to_lower(trim(poi.city)) != wanted_city) continue;
    return &poi;
  }
  return nullptr;
}

PoiStore PoiStore::subset_city(std::string_view city) const {
  const std::string wanted = to_lower(trim(city));
  PoiStore out(dim_);
  for (const auto& [id, poi] : pois_) {
    if (to_lower(trim(poi.city)) == wanted) out.pois_.emplace(id, poi);
  }
  for (const auto& [key, vec] : embeddings_) {
    if (out.pois_.count(key.first)) out.embeddings_.emplace(key, vec);
  }
  return out;
}

std::vector<std::string> PoiStore::cities() const {
  std::vector<std::string> out;
  for (const auto& [id, poi] : pois_) {
    if (std::find(out.begin(), out.end(), poi.city) == out.end()) out.push_back(poi.city);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void PoiStore::set_embedding(PoiId id, const std::string& model_tag, std::vector<double> vector) {
  if (!find(id)) throw StoreError("embedding for unknown POI id " + std::to_string(id));
  if (model_tag.empty() || model_tag.find_first_of(" \t\r\n") != std::string::npos) {
    throw std::invalid_argument("model tag must be non-empty without whitespace");
  }
  if (vector.empty()) throw std::invalid_argument("embedding vector must not be empty");
  for (double v : vector) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding has non-finite entries");
  }
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw StoreError("embedding dimension " + std::to_string(vector.size()) +
                     " does not match store dimension " + std::to_string(dim_));
  }
  embeddings_.insert_or_assign({id, model_tag}, std::move(vector));
}

const std::vector<double>* PoiStore::embedding(PoiId id, const std::string& model_tag) const {
  auto it = embeddings_.find({id, model_tag});
  return it == embeddings_.end() ? nullptr : &it->second;
}

std::vector<PoiId> PoiStore::missing_embeddings(const std::string& model_tag) const {
  std::vector<PoiId> missing;
  for (const auto& [id, poi] : pois_) {
    if (!embedding(id, model_tag)) missing.push_back(id);
  }
  return missing;
}

EmbeddingMatrix PoiStore::embeddings_matrix(const std::string& model_tag) const {
  if (const auto missing = missing_embeddings(model_tag); !missing.empty()) {
    std::string ids;
    for (PoiId id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    throw StoreError("POIs without '" + model_tag + "' embedding: " + ids);
  }
  EmbeddingMatrix m;
  m.dim = dim_;
  m.ids.reserve(pois_.size());
  m.data.reserve(pois_.size() * dim_);
  for (const auto& [id, poi] : pois_) {
    const auto* v = embedding(id, model_tag);
    m.ids.push_back(id);
    m.data.insert(m.data.end(), v->begin(), v->end());
  }
  return m;
}

std::filesystem::path embedding_sidecar_path(const std::filesystem::path& poi_path) {
  return std::filesystem::path(poi_path.string() + ".emb");
}

void PoiStore::save(const std::filesystem::path& path) const {
  std::string pois;
  for (const auto& [id, poi] : pois_) {
    pois += poi_to_json(poi).dump();
    pois += '\n';
  }
  write_file(path, pois);

  std::string emb;
  for (const auto& [key, vec] : embeddings_) {
    emb += std::to_string(key.first) + ' ' + key.second + ' ' + std::to_string(vec.size());
    for (double v : vec) {
      emb += ' ';
      emb += format_double(v);
    }
    emb += '\n';
  }
  write_file(embedding_sidecar_path(path), emb);
}

PoiStore PoiStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open POI file: " + path.string());
  PoiStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::string where = path.filename().string() + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      if (j.contains("id") && j.at("id").is_number_integer()) {
        where += " (record id " + std::to_string(j.at("id").get<PoiId>()) + ")";
      }
      Poi poi = poi_from_json(j);
      if (poi.id <= 0) throw ParseError("id must be positive");
      if (store.find(poi.id)) throw ParseError("duplicate id " + std::to_string(poi.id));
      store.upsert(std::move(poi), /*force=*/true);
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }

  const auto sidecar = embedding_sidecar_path(path);
  std::ifstream emb(sidecar, std::ios::binary);
  if (!emb) return store;
  line_no = 0;
  while (std::getline(emb, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = sidecar.filename().string() + ":" + std::to_string(line_no);
    std::istringstream fields(line);
    PoiId id = 0;
    std::string tag;
    std::size_t dim = 0;
    if (!(fields >> id >> tag >> dim)) throw ParseError(where + ": expected 'id model_tag dimension'");
    std::vector<double> vec;
    vec.reserve(dim);
    for (std::string tok; fields >> tok;) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(where + ": bad real '" + tok + "'");
      }
      vec.push_back(v);
    }
    if (vec.size() != dim) {
      throw ParseError(where + ": expected " + std::to_string(dim) + " values, got " +
                       std::to_string(vec.size()));
    }
    try {
      store.set_embedding(id, tag, std::move(vec));
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return store;
}

std::vector<GroundTruthItinerary> load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open ground-truth file: " + path.string());
  std::vector<GroundTruthItinerary> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(where + ": expected request<TAB>ids");
    GroundTruthItinerary rec;
    rec.user_request = trim(line.substr(0, tab));
    if (rec.user_request.empty()) throw ParseError(where + ": empty request");
    std::istringstream ids(line.substr(tab + 1));
    for (std::string tok; std::getline(ids, tok, ',');) {
      tok = trim(tok);
      PoiId id = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(where + ": bad POI id '" + tok + "'");
      }
      rec.poi_ids.push_back(id);
    }
    if (rec.poi_ids.empty()) throw ParseError(where + ": empty itinerary");
    out.push_back(std::move(rec));
  }
  return out;
}

void save_ground_truth(const std::filesystem::path& path,
                       std::span<const GroundTruthItinerary> records) {
  std::string content;
  for (const auto& rec : records) {
    if (rec.user_request.find_first_of("\t\n") != std::string::npos) {
      throw std::invalid_argument("request must not contain tabs or newlines");
    }
    content += rec.user_request;
    content += '\t';
    for (std::size_t i = 0; i < rec.poi_ids.size(); ++i) {
      if (i) content += ',';
      content += std::to_string(rec.poi_ids[i]);
    }
    content += '\n';
  }
  write_file(path, content);
}

void validate_ground_truth(std::span<const GroundTruthItinerary> records, const PoiStore& store) {
  for (const auto& rec : records) {
    for (PoiId id : rec.poi_ids) {
      if (!store.find(id)) {
        throw StoreError("ground truth for '" + rec.user_request + "' references unknown POI id " +
                         std::to_string(id));
      }
    }
  }
}

}  // namespace citywalk
