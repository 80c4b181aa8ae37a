#include "citywalk/decompose.hpp"

#include "citywalk/text.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

std::string read_text_field(const json& element, const char* key, std::size_t index,
                            std::vector<std::string>& report) {
  if (!element.contains(key) || element.at(key).is_null()) return {};
  const auto& v = element.at(key);
  if (v.is_string()) return trim(v.get<std::string>());
  report.push_back("element " + std::to_string(index) + ": non-text '" + key + "' ignored");
  return {};
}

bool read_mustsee(const json& element, std::size_t index, std::vector<std::string>& report) {
  if (!element.contains("mustsee") || element.at("mustsee").is_null()) return false;
  const auto& v = element.at("mustsee");
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = to_lower(trim(v.get<std::string>()));
    if (s == "true" || s == "false") {
      report.push_back("element " + std::to_string(index) + ": mustsee given as text");
      return s == "true";
    }
  }
  if (v.is_number_integer()) {
    report.push_back("element " + std::to_string(index) + ": mustsee given as number");
    return v.get<long long>() != 0;
  }
  report.push_back("element " + std::to_string(index) + ": unreadable mustsee treated as false");
  return false;
}

}  // namespace

std::string_view to_string(SubRequestType type) {
  switch (type) {
    case SubRequestType::start: return "start";
    case SubRequestType::end: return "end";
    case SubRequestType::poi: return "POI";
    case SubRequestType::itinerary: return "itinerary";
  }
  return "POI";
}

std::optional<SubRequestType> parse_subrequest_type(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "start") return SubRequestType::start;
  if (t == "end") return SubRequestType::end;
  if (t == "poi") return SubRequestType::poi;
  if (t == "itinerary") return SubRequestType::itinerary;
  return std::nullopt;
}

ValidatedDecomposition validate_subrequests(const json& raw, std::string raw_request) {
  if (!raw.is_array()) throw std::invalid_argument("subrequests must be a JSON array");
  ValidatedDecomposition out;
  out.decomposition.raw_request = std::move(raw_request);
  auto& report = out.report;
  bool have_start = false;
  bool have_end = false;

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& element = raw[i];
    const std::string where = "element " + std::to_string(i);
    if (!element.is_object()) {
      report.push_back(where + ": not an object, dropped");
      continue;
    }
    SubRequest sub;
    sub.pos = read_text_field(element, "pos", i, report);
    sub.neg = read_text_field(element, "neg", i, report);
    if (sub.pos.empty() && sub.neg.empty()) {
      report.push_back(where + ": neither pos nor neg, dropped");
      continue;
    }
    sub.mustsee = read_mustsee(element, i, report);

    const json type_field = element.contains("type") ? element.at("type") : json();
    std::optional<SubRequestType> type;
    if (type_field.is_string()) type = parse_subrequest_type(type_field.get<std::string>());
    if (!type) {
      report.push_back(where + ": unknown type " + type_field.dump() + " repaired to POI");
      type = SubRequestType::poi;
    }
    sub.type = *type;

    if (sub.type == SubRequestType::start) {
      if (have_start) {
        report.push_back(where + ": second start demoted to POI");
        sub.type = SubRequestType::poi;
      }
      have_start = true;
    } else if (sub.type == SubRequestType::end) {
      if (have_end) {
        report.push_back(where + ": second end demoted to POI");
        sub.type = SubRequestType::poi;
      }
      have_end = true;
    }

    if (sub.mustsee && sub.type == SubRequestType::itinerary) {
      report.push_back(where + ": itinerary-level subrequest cannot be must-see");
      sub.mustsee = false;
    }
    if (sub.mustsee && sub.pos.empty()) {
      report.push_back(where + ": must-see without a place name");
      sub.mustsee = false;
    }
    out.decomposition.subrequests.push_back(std::move(sub));
  }

  if (out.decomposition.subrequests.empty()) {
    throw DecompositionError("decomposition failed: no valid subrequests", raw.dump());
  }
  return out;
}

json to_json(const SubRequest& sub) {
  return json{{"pos", sub.pos},
              {"neg", sub.neg},
              {"mustsee", sub.mustsee},
              {"type", std::string(to_string(sub.type))}};
}

json to_json(const Decomposition& decomposition) {
  json arr = json::array();
  for (const auto& s : decomposition.subrequests) arr.push_back(to_json(s));
  return arr;
}

json parse_json_array_reply(std::string_view reply) {
  const std::string body = strip_code_fences(reply);
  try {
    json j = json::parse(body);
    if (j.is_array()) return j;
    if (j.is_object() && j.contains("subrequests") && j.at("subrequests").is_array()) {
      return j.at("subrequests");
    }
    throw std::invalid_argument("reply is JSON but not an array");
  } catch (const json::parse_error&) {
    const auto open = body.find('[');
    const auto close = body.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) throw;
    json j = json::parse(body.substr(open, close - open + 1));
    if (!j.is_array()) throw std::invalid_argument("reply is JSON but not an array");
    return j;
  }
}

ValidatedDecomposition decompose(std::string_view request, LlmGateway& gateway,
                                 const PromptLibrary& prompts, const DecomposeOptions& options) {
  const std::string req = trim(request);
  if (req.empty()) throw std::invalid_argument("request must not be empty");

  const std::string prompt =
      render_template(prompts.text(PromptId::decompose), {{"request", req}});
  ChatRequest chat{prompt, options.temperature, options.max_tokens, options.model_tag};
  std::string reply = gateway.chat(chat);

  std::string first_error;
  try {
    return validate_subrequests(parse_json_array_reply(reply), req);
  } catch (const std::exception& e) {
    first_error = e.what();
  }

  chat.prompt = prompt + "\n\nYour previous reply could not be used (" + first_error +
                "). Reply again with only the JSON array.";
  reply = gateway.chat(chat);
  try {
    return validate_subrequests(parse_json_array_reply(reply), req);
  } catch (const std::exception& e) {
    throw DecompositionError(std::string("decomposition failed: ") + e.what(), reply);
  }
}

}  // namespace citywalk
