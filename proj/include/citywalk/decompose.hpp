#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citywalk/errors.hpp"
#include "citywalk/llm_gateway.hpp"
#include "citywalk/prompts.hpp"
#include "json.hpp"

namespace citywalk {

enum class SubRequestType { start, end, poi, itinerary };

std::string_view to_string(SubRequestType type);
std::optional<SubRequestType> parse_subrequest_type(std::string_view text);

/// One decomposed preference. Invariants (enforced by validate_subrequests):
/// pos and neg are not both empty; mustsee implies a non-empty pos and a
/// place-level type.
struct SubRequest {
  std::string pos;
  std::string neg;
  bool mustsee = false;
  SubRequestType type = SubRequestType::itinerary;

  friend bool operator==(const SubRequest&, const SubRequest&) = default;
};

struct Decomposition {
  std::vector<SubRequest> subrequests;
  std::string raw_request;

  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

class DecompositionError : public Error {
 public:
  DecompositionError(const std::string& what, std::string raw_text)
      : Error(what), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

struct ValidatedDecomposition {
  Decomposition decomposition;
  std::vector<std::string> report;  // one entry per repair or drop
};

/// Pure, deterministic repair of an LLM-produced JSON array into a
/// Decomposition. Throws std::invalid_argument when `raw` is not an array and
/// DecompositionError when nothing valid remains.
ValidatedDecomposition validate_subrequests(const nlohmann::json& raw,
                                            std::string raw_request = {});

nlohmann::json to_json(const SubRequest& sub);
nlohmann::json to_json(const Decomposition& decomposition);

struct DecomposeOptions {
  std::string model_tag = "fast";
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Extracts a JSON array from an LLM reply (code fences and surrounding prose
/// tolerated). Throws nlohmann::json::exception or std::invalid_argument.
nlohmann::json parse_json_array_reply(std::string_view reply);

/// Decomposes `request` through the gateway. One reprompt carrying the parse
/// error is attempted; after that, DecompositionError("decomposition failed").
ValidatedDecomposition decompose(std::string_view request, LlmGateway& gateway,
                                 const PromptLibrary& prompts,
                                 const DecomposeOptions& options = {});

}  // namespace citywalk
