#include "citywalk/runtime.hpp"

#include <chrono>

namespace citywalk {

std::shared_ptr<LlmGateway> make_gateway(const Config& config) {
  const auto networked = [](LlmMode m) { return m == LlmMode::live || m == LlmMode::record; };
  std::shared_ptr<Transport> transport;
  if (networked(config.gateway.chat_mode) || networked(config.gateway.embed_mode)) {
    transport = std::make_shared<HttpTransport>(config.api_base, config.api_key,
                                                std::chrono::seconds(config.timeout_s));
  } else {
    transport = std::make_shared<OfflineTransport>();
  }
  auto cassette = config.cassette.empty() ? std::make_shared<Cassette>()
                                          : std::make_shared<Cassette>(config.cassette);
  return std::make_shared<LlmGateway>(config.gateway, std::move(transport), std::move(cassette));
}

PromptLibrary make_prompts(const Config& config) {
  if (config.prompts_dir.empty()) return PromptLibrary();
  return PromptLibrary::from_directory(config.prompts_dir);
}

PoiStore load_store(const Config& config) {
  if (config.poi_file.empty()) return PoiStore(config.gateway.embedding_dim);
  return PoiStore::load(config.poi_file);
}

std::shared_ptr<Geocoder> make_geocoder(const Config& config, const PoiStore& store) {
  const int threshold = config.retrieval.fuzzy_threshold;
  if (!config.geocoder_file.empty()) {
    return std::make_shared<FileGeocoder>(FileGeocoder::load(config.geocoder_file, threshold));
  }
  return std::make_shared<FileGeocoder>(FileGeocoder::from_store(store, threshold));
}

std::size_t ensure_embeddings(PoiStore& store, LlmGateway& gateway) {
  const auto missing = store.missing_embeddings(gateway.embed_model());
  if (missing.empty()) return 0;
  std::vector<std::string> texts;
  for (PoiId id : missing) texts.push_back(store.at(id).context);
  auto vectors = gateway.embed(texts);
  for (std::size_t i = 0; i < missing.size(); ++i) {
    store.set_embedding(missing[i], gateway.embed_model(), std::move(vectors[i]));
  }
  return missing.size();
}

}  // namespace citywalk
