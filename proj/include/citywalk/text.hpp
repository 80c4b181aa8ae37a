#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citywalk {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercases, maps every non-alphanumeric ASCII byte to a space, and splits.
/// Non-ASCII bytes are kept as part of tokens.
std::vector<std::string> fuzzy_tokens(std::string_view s);

/// Indel-normalized similarity in [0, 100] of two strings.
double fuzzy_ratio(std::string_view a, std::string_view b);

/// Token-set ratio as popularized by the `thefuzz` library: compares the
/// sorted token intersection against each side's remainder and takes the
/// best plain ratio. Rounded to the nearest integer.
int token_set_ratio(std::string_view a, std::string_view b);

/// Removes a surrounding markdown code fence (```json ... ```), if any, and
/// trims. Text outside the first fence is discarded.
std::string strip_code_fences(std::string_view text);

/// Replaces `{{name}}` placeholders. Unknown placeholders are left verbatim.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

/// Normalizes CRLF/CR to LF and strips trailing whitespace on every line and
/// at the end of the text.
std::string normalize_prompt(std::string_view prompt);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

/// First decimal number appearing in the text.
std::optional<double> first_number(std::string_view text);

}  // namespace citywalk
