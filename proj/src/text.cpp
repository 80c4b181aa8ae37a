#include "citywalk/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace citywalk {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return std::string(s.substr(begin, end - begin));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> fuzzy_tokens(std::string_view s) {
  std::string cleaned = to_lower(s);
  for (auto& c : cleaned) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && !std::isalnum(u)) c = ' ';
  }
  std::vector<std::string> tokens;
  std::istringstream in(cleaned);
  for (std::string t; in >> t;) tokens.push_back(t);
  return tokens;
}

double fuzzy_ratio(std::string_view a, std::string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 100.0;
  return 100.0 * 2.0 * static_cast<double>(lcs_length(a, b)) / static_cast<double>(total);
}

int token_set_ratio(std::string_view a, std::string_view b) {
  const auto ta = fuzzy_tokens(a);
  const auto tb = fuzzy_tokens(b);
  if (ta.empty() || tb.empty()) return 0;
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());

  std::vector<std::string> common;
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(only_a));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(only_b));

  if (!common.empty() && (only_a.empty() || only_b.empty())) return 100;

  const std::string sect = join(common);
  const std::string diff_a = join(only_a);
  const std::string diff_b = join(only_b);
  const std::string combined_a = trim(sect + " " + diff_a);
  const std::string combined_b = trim(sect + " " + diff_b);

  double best = fuzzy_ratio(combined_a, combined_b);
  if (!sect.empty()) {
    best = std::max({best, fuzzy_ratio(sect, combined_a), fuzzy_ratio(sect, combined_b)});
  }
  return static_cast<int>(std::lround(best));
}

std::string strip_code_fences(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return trim(text);
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return trim(text.substr(open + 3));
  ++body_start;
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return trim(text.substr(body_start));
  return trim(text.substr(body_start, close - body_start));
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string key = trim(tmpl.substr(open + 2, close - open - 2));
    if (auto it = vars.find(key); it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  return out;
}

std::string normalize_prompt(std::string_view prompt) {
  std::string unified;
  unified.reserve(prompt.size());
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (prompt[i] == '\r') {
      unified += '\n';
      if (i + 1 < prompt.size() && prompt[i + 1] == '\n') ++i;
    } else {
      unified += prompt[i];
    }
  }
  std::string out;
  out.reserve(unified.size());
  std::size_t start = 0;
  while (start <= unified.size()) {
    auto nl = unified.find('\n', start);
    if (nl == std::string::npos) nl = unified.size();
    std::string_view line(unified.data() + start, nl - start);
    std::size_t end = line.size();
    while (end > 0 && is_space(line[end - 1])) --end;
    out.append(line.substr(0, end));
    if (nl < unified.size()) out += '\n';
    start = nl + 1;
  }
  while (!out.empty() && is_space(out.back())) out.pop_back();
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::optional<double> first_number(std::string_view text) {
  static const std::regex number(R"([-+]?\d+(?:\.\d+)?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, number)) return std::nullopt;
  try {
    return std::stod(m.str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace citywalk
