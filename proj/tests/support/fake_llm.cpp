#include "fake_llm.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "citywalk/random.hpp"
#include "citywalk/text.hpp"
#include "json.hpp"

namespace citywalk::testing {

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string task_of(const std::string& prompt) {
  const std::string marker = "## Task: ";
  const auto at = prompt.find(marker);
  if (at == std::string::npos) return {};
  const auto end = prompt.find('\n', at);
  return trim(prompt.substr(at + marker.size(), end - at - marker.size()));
}

std::string section(const std::string& text, const std::string& from, const std::string& to) {
  const auto a = text.find(from);
  if (a == std::string::npos) return {};
  const auto b = text.find(to, a + from.size());
  return text.substr(a + from.size(), b == std::string::npos ? std::string::npos : b - a - from.size());
}

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::vector<std::string> split_clauses(const std::string& request) {
  std::string s = request;
  for (std::size_t at; (at = s.find(" and ")) != std::string::npos;) s.replace(at, 5, ",");
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == '.' || c == ';' || c == '!') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double requested_hours(const std::string& request) {
  const std::string low = to_lower(request);
  static const std::regex hours_re(R"((\d+(?:\.\d+)?)[ -]hours?)");
  std::smatch m;
  if (std::regex_search(low, m, hours_re)) return std::stod(m[1]);
  if (low.find("half day") != std::string::npos || low.find("half-day") != std::string::npos) return 4.5;
  if (low.find("full day") != std::string::npos || low.find("whole day") != std::string::npos) return 10;
  if (low.find("evening") != std::string::npos || low.find("afternoon") != std::string::npos) return 4;
  return 6;
}

struct Candidate {
  long long id;
  std::string name;
  std::string line;
};

std::vector<Candidate> candidate_lines(const std::string& block) {
  static const std::regex line_re(R"(\[id=(-?\d+)\] ([^|(\n]*)([^\n]*))");
  std::vector<Candidate> out;
  for (auto it = std::sregex_iterator(block.begin(), block.end(), line_re); it != std::sregex_iterator(); ++it) {
    out.push_back({std::stoll((*it)[1]), trim((*it)[2].str()), to_lower((*it)[0].str())});
  }
  return out;
}

std::vector<std::string> words_of(const std::string& text) {
  static const std::set<std::string> stop{"the", "and", "for", "with", "then", "day", "half",
                                          "full", "hours", "hour", "some", "around", "a", "of"};
  std::vector<std::string> out;
  std::string cur;
  for (char c : to_lower(text) + " ") {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += c;
    } else {
      if (cur.size() >= 3 && !stop.count(cur)) {
        if (cur.size() > 4 && cur.back() == 's') cur.pop_back();
        out.push_back(cur);
      }
      cur.clear();
    }
  }
  return out;
}

// Word overlap between the request and a candidate line; words from
// "no ..."/"avoid ..." clauses count against it.
int relevance(const std::string& request, const Candidate& c) {
  int score = 0;
  for (const auto& clause : split_clauses(request)) {
    const std::string low = to_lower(clause);
    const bool negative = starts_with(low, "no ") || starts_with(low, "avoid ") || starts_with(low, "without ");
    for (const auto& w : words_of(clause)) {
      if (c.line.find(w) != std::string::npos) score += negative ? -1 : 1;
    }
  }
  return score;
}

// Indices of the `k` most relevant candidates, in listing order.
std::vector<std::size_t> most_relevant(const std::string& request, const std::vector<Candidate>& cs,
                                       std::size_t k) {
  std::vector<std::size_t> idx(cs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<int> score;
  for (const auto& c : cs) score.push_back(relevance(request, c));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (idx.size() > k) idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string reply_decompose(const std::string& prompt) {
  return fake_decomposition(between_tags(prompt, "request"));
}

std::string reply_budget(const std::string& prompt) {
  return json{{"hours", requested_hours(between_tags(prompt, "request"))}}.dump();
}

std::string reply_start(const std::string& prompt) {
  const auto candidates = candidate_lines(section(prompt, "Candidates:", "Reply with"));
  if (candidates.empty()) return "I cannot tell.";
  const auto best = most_relevant(between_tags(prompt, "request"), candidates, 1);
  return json{{"start_id", candidates[best.front()].id}}.dump();
}

std::string reply_itinerary(const std::string& prompt, OrderPolicy policy) {
  const auto all = candidate_lines(section(prompt, "### 2. Candidate POIs", "### 3. Task"));
  static const std::regex hours_re(R"(take about (\d+(?:\.\d+)?) hours)");
  std::smatch m;
  double hours = 6;
  if (std::regex_search(prompt, m, hours_re)) hours = std::stod(m[1]);
  const auto wanted = static_cast<std::size_t>(std::clamp(std::lround(hours), 3L, 8L));
  std::vector<Candidate> candidates;
  for (std::size_t i : most_relevant(between_tags(prompt, "request"), all, wanted)) candidates.push_back(all[i]);
  if (policy == OrderPolicy::shuffle) {
    Rng rng(fnv1a(prompt));
    rng.shuffle(std::span<Candidate>(candidates));
  } else if (policy == OrderPolicy::reverse) {
    std::reverse(candidates.begin(), candidates.end());
  }
  json ids = json::array();
  std::string narrative;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ids.push_back(candidates[i].id);
    narrative += (i == 0 ? "Begin at " : " Then walk to ") + candidates[i].name + ".";
  }
  return json{{"selected_ids", ids}, {"narrative", narrative}}.dump();
}

std::string reply_baseline(const std::string& prompt, const std::vector<std::string>& known) {
  static const std::regex city_re(R"(citywalk in (.+?) for the traveler)");
  std::smatch m;
  const std::string city = std::regex_search(prompt, m, city_re) ? m[1].str() : "the city";
  std::vector<std::string> names = known;
  Rng rng(fnv1a(prompt));
  rng.shuffle(std::span<std::string>(names));
  if (names.size() > 5) names.resize(5);
  names.push_back("Grand " + city + " Tower");
  std::string text;
  for (const auto& n : names) text += "Visit " + n + ". ";
  return json{{"pois", names}, {"itinerary", trim(text)}}.dump();
}

std::size_t stop_count(const std::string& itinerary) {
  return static_cast<std::size_t>(std::count(itinerary.begin(), itinerary.end(), '\n')) +
         static_cast<std::size_t>(std::count(itinerary.begin(), itinerary.end(), '.'));
}

std::string reply_judge(const std::string& prompt, JudgePolicy policy) {
  if (policy == JudgePolicy::first_wins) return R"({"PQ": 1, "IQ": 1, "Match": 1})";
  const std::string first = trim(section(prompt, "Itinerary 1:\n", "\nItinerary 2:"));
  const std::string second = trim(section(prompt, "Itinerary 2:\n", "\nFor each criterion"));
  const auto a = stop_count(first);
  const auto b = stop_count(second);
  const int v = a == b ? 0 : (a > b ? 1 : 2);
  return json{{"PQ", v}, {"IQ", v}, {"Match", v}}.dump();
}

std::string reply_extract(const std::string& prompt) {
  const std::string post = between_tags(prompt, "post");
  static const std::regex quoted_re("\"([^\"]+)\"");
  json out = json::array();
  for (auto it = std::sregex_iterator(post.begin(), post.end(), quoted_re); it != std::sregex_iterator(); ++it) {
    out.push_back(json{{"name", (*it)[1].str()}, {"location", ""}});
  }
  return out.dump();
}

std::string reply_description(const std::string& prompt) {
  static const std::regex re("description of \"([^\"]+)\" in (.+?) for a");
  std::smatch m;
  if (!std::regex_search(prompt, m, re)) return "A place worth a stop.";
  return m[1].str() + " is a well-liked stop in " + m[2].str() +
         ", praised in travel posts for its atmosphere.";
}

}  // namespace

std::string between_tags(const std::string& text, const std::string& tag) {
  return trim(section(text, "<" + tag + ">", "</" + tag + ">"));
}

std::string fake_decomposition(const std::string& request) {
  json out = json::array();
  const auto add = [&](std::string pos, std::string neg, bool mustsee, const char* type) {
    out.push_back(json{{"pos", std::move(pos)}, {"neg", std::move(neg)}, {"mustsee", mustsee}, {"type", type}});
  };
  bool first = true;
  for (const auto& clause : split_clauses(request)) {
    const std::string low = to_lower(clause);
    const auto rest = [&](std::size_t n) { return trim(clause.substr(n)); };
    if (starts_with(low, "start at ") || starts_with(low, "start from ") || starts_with(low, "begin at ")) {
      add(rest(low.find(' ', low.find(' ') + 1) + 1), "", true, "start");
    } else if (starts_with(low, "end at ") || starts_with(low, "finish at ")) {
      add(rest(low.find(' ', low.find(' ') + 1) + 1), "", true, "end");
    } else if (starts_with(low, "must see ") || starts_with(low, "visit ")) {
      add(rest(starts_with(low, "visit ") ? 6 : 9), "", true, "POI");
    } else if (starts_with(low, "no ") || starts_with(low, "avoid ") || starts_with(low, "without ")) {
      add("", rest(low.find(' ') + 1), false, "itinerary");
    } else {
      add(clause, "", false, first ? "itinerary" : "POI");
    }
    first = false;
  }
  return out.dump();
}

std::string FakeLlm::chat(const ChatRequest& request) {
  if (chat_calls_.fetch_add(1) >= options_.fail_after) {
    throw TransportError("provider unavailable", false);
  }
  const std::string& p = request.prompt;
  const std::string task = task_of(p);
  if (task == "request decomposition") return reply_decompose(p);
  if (task == "itinerary duration") return reply_budget(p);
  if (task == "start POI selection") return reply_start(p);
  if (task == "itinerary generation") return reply_itinerary(p, options_.order);
  if (task == "itinerary generation (direct)") return reply_baseline(p, options_.known_names);
  if (task == "itinerary comparison") return reply_judge(p, options_.judge);
  if (task == "POI extraction") return reply_extract(p);
  if (task == "POI description") return reply_description(p);
  throw TransportError("unrecognised prompt task '" + task + "'", false);
}

std::vector<std::vector<double>> FakeLlm::embed(const std::vector<std::string>& texts,
                                                const std::string&) {
  std::vector<std::vector<double>> out;
  for (const auto& t : texts) out.push_back(stub_embed(t, options_.embedding_dim));
  return out;
}

std::string ScriptedLlm::chat(const ChatRequest& request) {
  requests_.push_back(request);
  if (replies_.empty()) throw TransportError("no scripted reply", false);
  const std::size_t i = std::min(requests_.size(), replies_.size()) - 1;
  return replies_[i];
}

std::vector<std::vector<double>> ScriptedLlm::embed(const std::vector<std::string>& texts,
                                                    const std::string&) {
  std::vector<std::vector<double>> out;
  for (const auto& t : texts) out.push_back(stub_embed(t, 256));
  return out;
}

std::shared_ptr<LlmGateway> live_gateway(std::shared_ptr<Transport> transport) {
  GatewayOptions options;
  options.chat_mode = LlmMode::live;
  options.max_retries = 0;
  return std::make_shared<LlmGateway>(options, std::move(transport), nullptr);
}

std::shared_ptr<LlmGateway> recording_gateway(std::shared_ptr<Transport> transport,
                                              std::shared_ptr<Cassette> cassette) {
  GatewayOptions options;
  options.chat_mode = LlmMode::record;
  options.max_retries = 0;
  return std::make_shared<LlmGateway>(options, std::move(transport), std::move(cassette),
                                      [] { return std::string("2026-01-01T00:00:00Z"); });
}

std::shared_ptr<LlmGateway> replay_gateway(std::shared_ptr<Cassette> cassette) {
  GatewayOptions options;
  options.chat_mode = LlmMode::replay;
  return std::make_shared<LlmGateway>(options, std::make_shared<OfflineTransport>(),
                                      std::move(cassette));
}

}  // namespace citywalk::testing
