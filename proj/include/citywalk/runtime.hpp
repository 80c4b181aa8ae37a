#pragma once

#include <cstddef>
#include <memory>

#include "citywalk/config.hpp"
#include "citywalk/geocoder.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"

namespace citywalk {

/// Gateway wired from the [llm] section: an HTTP transport when a live or
/// recording mode is configured, otherwise one that refuses network access.
std::shared_ptr<LlmGateway> make_gateway(const Config& config);

/// Built-in prompts, overridden by store.prompts_dir when set.
PromptLibrary make_prompts(const Config& config);

/// Loads store.poi_file (an empty store when unset).
PoiStore load_store(const Config& config);

/// store.geocoder_file when set, else a geocoder over the store itself.
std::shared_ptr<Geocoder> make_geocoder(const Config& config, const PoiStore& store);

/// Embeds every POI lacking a record for the gateway's embedding model.
/// Returns the number of POIs embedded.
std::size_t ensure_embeddings(PoiStore& store, LlmGateway& gateway);

}  // namespace citywalk
