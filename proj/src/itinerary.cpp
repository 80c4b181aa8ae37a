#include "citywalk/itinerary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "citywalk/text.hpp"

namespace citywalk {

using json = nlohmann::json;

namespace {

std::string rating_text(double rating) {
  std::string s = format_double(rating);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string one_line(std::string_view text, std::size_t limit = 200) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  if (out.size() > limit) {
    out.resize(limit);
    // Do not leave a split UTF-8 sequence behind.
    while (!out.empty() && (static_cast<unsigned char>(out.back()) & 0xC0) == 0x80) out.pop_back();
    if (!out.empty() && (static_cast<unsigned char>(out.back()) & 0x80)) out.pop_back();
    out += "...";
  }
  return out;
}

std::optional<PoiId> as_id(const json& v) {
  if (v.is_number_integer()) return v.get<PoiId>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9e15) return static_cast<PoiId>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return std::nullopt;
    for (std::size_t k = i; k < s.size(); ++k) {
      if (s[k] < '0' || s[k] > '9') return std::nullopt;
    }
    return static_cast<PoiId>(std::stoll(s));
  }
  return std::nullopt;
}

struct ParsedReply {
  json selected;
  std::optional<std::string> narrative;
};

std::optional<ParsedReply> parse_reply(std::string_view reply) {
  const std::string body = strip_code_fences(reply);
  json j;
  bool ok = false;
  try {
    j = json::parse(body);
    ok = true;
  } catch (const json::exception&) {
  }
  if (!ok) {
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    try {
      j = json::parse(body.substr(open, close - open + 1));
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }
  ParsedReply out;
  if (j.is_array()) {
    out.selected = j;
    return out;
  }
  if (!j.is_object()) return std::nullopt;
  if (!j.contains("selected_ids")) return std::nullopt;
  out.selected = j.at("selected_ids");
  if (j.contains("narrative") && j.at("narrative").is_string()) {
    out.narrative = j.at("narrative").get<std::string>();
  }
  return out;
}

}  // namespace

std::optional<double> parse_hours(std::string_view reply) {
  const std::string body = strip_code_fences(reply);
  std::optional<double> hours;
  try {
    const json j = json::parse(body);
    if (j.is_object() && j.contains("hours") && j.at("hours").is_number()) {
      hours = j.at("hours").get<double>();
    } else if (j.is_number()) {
      hours = j.get<double>();
    }
  } catch (const json::exception&) {
  }
  if (!hours) hours = first_number(body);
  if (!hours || !std::isfinite(*hours) || *hours <= 0.0) return std::nullopt;
  return hours;
}

TimeBudget estimate_time_budget(std::string_view request, LlmGateway& gateway,
                                const PromptLibrary& prompts, const std::string& model_tag) {
  const std::string req = trim(request);
  if (req.empty()) throw std::invalid_argument("request must not be empty");
  const std::string prompt =
      render_template(prompts.text(PromptId::time_budget), {{"request", req}});
  const std::string reply = gateway.chat(ChatRequest{prompt, 0.0, 64, model_tag});
  TimeBudget out;
  if (auto h = parse_hours(reply)) {
    out.hours = std::clamp(*h, kMinHours, kMaxHours);
    if (out.hours != *h) {
      out.warnings.push_back("time budget " + format_double(*h) + " h clamped to " +
                             format_double(out.hours) + " h");
    }
  } else {
    out.hours = kDefaultHours;
    out.warnings.push_back("time budget reply unusable; assuming 6 hours");
  }
  return out;
}

std::string ig_candidate_line(std::size_t number, const Poi& poi) {
  return std::to_string(number) + ". [id=" + std::to_string(poi.id) + "] " + one_line(poi.name) +
         " | " + std::string(to_string(poi.category)) + " | " + rating_text(poi.rating) + " | " +
         one_line(poi.description);
}

std::string describe_preferences(const Decomposition& decomposition) {
  std::string out;
  for (const auto& sub : decomposition.subrequests) {
    out += "- " + std::string(to_string(sub.type)) + ":";
    if (!sub.pos.empty()) out += " likes \"" + sub.pos + "\"";
    if (!sub.neg.empty()) out += std::string(sub.pos.empty() ? "" : ";") + " dislikes \"" + sub.neg + "\"";
    if (sub.mustsee) out += "; must-see";
    out += "\n";
  }
  if (out.empty()) out = "- none\n";
  out.pop_back();
  return out;
}

std::string build_ig_prompt(std::string_view request, const Decomposition& decomposition,
                            std::span<const Poi> ordered_pois, double hours,
                            std::string_view style, const PromptLibrary& prompts,
                            bool allow_reorder) {
  if (ordered_pois.empty()) throw std::invalid_argument("no candidate POIs");
  std::string lines;
  for (std::size_t i = 0; i < ordered_pois.size(); ++i) {
    if (i) lines += "\n";
    lines += ig_candidate_line(i + 1, ordered_pois[i]);
  }
  const std::string rule =
      allow_reorder
          ? "List the selected ids in the order you recommend visiting them."
          : "Keep the selected POIs in the listed order; the list is already arranged as an "
            "efficient walking route.";
  const std::string extra = trim(style);
  return render_template(prompts.text(PromptId::itinerary),
                         {{"request", trim(request)},
                          {"preferences", describe_preferences(decomposition)},
                          {"candidates", lines},
                          {"ordering_rule", rule},
                          {"hours", format_double(hours)},
                          {"style", extra.empty() ? std::string() : "Additional style: " + extra}});
}

SelectionRepair repair_selection(const json& selected, std::span<const PoiId> order,
                                 bool allow_reorder) {
  SelectionRepair out;
  std::map<PoiId, std::size_t> position;
  for (std::size_t i = 0; i < order.size(); ++i) position.emplace(order[i], i);

  if (!selected.is_array()) {
    out.warnings.push_back("selected_ids is not a list");
    return out;
  }
  std::set<PoiId> seen;
  for (const auto& v : selected) {
    const auto id = as_id(v);
    if (!id) {
      out.warnings.push_back("non-integer id " + v.dump() + " dropped");
      continue;
    }
    if (!position.count(*id)) {
      out.warnings.push_back("unknown id " + std::to_string(*id) + " dropped");
      continue;
    }
    if (!seen.insert(*id).second) {
      out.warnings.push_back("duplicate id " + std::to_string(*id) + " dropped");
      continue;
    }
    out.ids.push_back(*id);
  }
  if (!allow_reorder) {
    auto sorted = out.ids;
    std::sort(sorted.begin(), sorted.end(),
              [&](PoiId a, PoiId b) { return position.at(a) < position.at(b); });
    if (sorted != out.ids) {
      out.warnings.push_back("selection reordered to follow the route");
      out.ids = std::move(sorted);
    }
  }
  return out;
}

std::string template_narrative(std::span<const PoiId> ids, std::span<const Poi> pois) {
  std::map<PoiId, const Poi*> by_id;
  for (const auto& p : pois) by_id[p.id] = &p;
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    const std::string name = it == by_id.end() ? "POI " + std::to_string(ids[i]) : it->second->name;
    if (i) out += "\n";
    out += "Stop " + std::to_string(i + 1) + ": " + name + ".";
  }
  return out;
}

Generation generate(std::string_view request, const Decomposition& decomposition,
                    std::span<const Poi> ordered_pois, double hours, std::string_view style,
                    LlmGateway& gateway, const PromptLibrary& prompts,
                    const GenerateOptions& options) {
  if (ordered_pois.empty()) throw std::invalid_argument("no candidate POIs");
  std::vector<PoiId> order;
  for (const auto& p : ordered_pois) order.push_back(p.id);
  if (std::set<PoiId>(order.begin(), order.end()).size() != order.size()) {
    throw std::invalid_argument("duplicate POI in ordered list");
  }
  if (!std::isfinite(hours) || hours <= 0.0) hours = kDefaultHours;

  const std::string prompt = build_ig_prompt(request, decomposition, ordered_pois, hours, style,
                                             prompts, options.allow_reorder);
  ChatRequest chat{prompt, options.temperature, options.max_tokens, options.model_tag};

  Generation out;
  out.itinerary.request = trim(request);
  out.itinerary.est_duration_hours = hours;

  auto parsed = parse_reply(gateway.chat(chat));
  if (!parsed) {
    out.warnings.push_back("itinerary reply could not be parsed; asking again");
    chat.prompt = prompt +
                  "\n\nYour previous reply could not be used. Reply again with only the JSON "
                  "object.";
    parsed = parse_reply(gateway.chat(chat));
  }

  if (parsed) {
    auto repair = repair_selection(parsed->selected, order, options.allow_reorder);
    out.warnings.insert(out.warnings.end(), repair.warnings.begin(), repair.warnings.end());
    out.itinerary.poi_ids = std::move(repair.ids);
    if (parsed->narrative && !trim(*parsed->narrative).empty()) {
      out.itinerary.narrative = *parsed->narrative;
    }
  } else {
    out.warnings.push_back("itinerary reply unparseable after retry");
  }

  if (out.itinerary.poi_ids.empty()) {
    const std::size_t n = std::min(std::max<std::size_t>(options.fallback_length, 1), order.size());
    out.itinerary.poi_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    out.itinerary.narrative.clear();
    out.fallback = true;
    out.warnings.push_back("FALLBACK: no usable selection; using the first " + std::to_string(n) +
                           " POIs of the route");
  }
  if (out.itinerary.narrative.empty()) {
    out.itinerary.narrative = template_narrative(out.itinerary.poi_ids, ordered_pois);
  }
  return out;
}

bool itinerary_valid(const Itinerary& itinerary, std::span<const PoiId> order, bool require_order) {
  if (itinerary.poi_ids.empty()) return false;
  if (!(itinerary.est_duration_hours > 0.0) || !std::isfinite(itinerary.est_duration_hours)) {
    return false;
  }
  std::map<PoiId, std::size_t> position;
  for (std::size_t i = 0; i < order.size(); ++i) position.emplace(order[i], i);
  std::set<PoiId> seen;
  std::optional<std::size_t> last;
  for (PoiId id : itinerary.poi_ids) {
    const auto it = position.find(id);
    if (it == position.end() || !seen.insert(id).second) return false;
    if (require_order && last && it->second <= *last) return false;
    last = it->second;
  }
  return true;
}

}  // namespace citywalk
