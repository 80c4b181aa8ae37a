#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "citywalk/errors.hpp"
#include "citywalk/geocoder.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/poi_store.hpp"
#include "citywalk/prompts.hpp"

namespace citywalk {

struct ExtractedPlace {
  std::string name;
  std::string location;
};

struct IngestReport {
  std::vector<PoiId> stored;
  std::vector<std::string> skipped;  // "<name>: <reason>"
  std::vector<std::string> errors;   // batch mode only: one per failed post
};

/// Failure after some POIs may already have been stored.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, IngestReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const IngestReport& partial() const { return partial_; }

 private:
  IngestReport partial_;
};

struct IngestOptions {
  std::string model_tag = "fast";
};

/// Parses the extraction reply: a JSON array of {"name", "location"}
/// objects (bare strings accepted as names). Throws on anything else.
std::vector<ExtractedPlace> parse_extraction(std::string_view reply);

/// Extracts places from the post, geocodes each, writes a description,
/// upserts and embeds it. Places the geocoder does not know are skipped and
/// reported. A second unreadable extraction raises IngestError("unparseable
/// extraction"); gateway or geocoder outages raise IngestError carrying what
/// was stored so far.
IngestReport ingest_post(std::string_view post_text, std::string_view city, PoiStore& store,
                         LlmGateway& gateway, Geocoder& geocoder, const PromptLibrary& prompts,
                         const IngestOptions& options = {});

struct PostInput {
  std::string text;
  std::string city;
};

/// Manually triggered refresh over a batch of posts. Failures are recorded
/// per post and the batch continues.
IngestReport ingest_batch(const std::vector<PostInput>& posts, PoiStore& store,
                          LlmGateway& gateway, Geocoder& geocoder, const PromptLibrary& prompts,
                          const IngestOptions& options = {});

}  // namespace citywalk
