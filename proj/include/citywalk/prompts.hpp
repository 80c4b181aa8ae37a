#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace citywalk {

enum class PromptId {
  decompose,
  time_budget,
  start_poi,
  itinerary,
  baseline,
  judge,
  extract_pois,
  poi_description,
};

inline constexpr std::size_t kPromptCount = 8;

/// File stem of the template, e.g. "decompose" for prompts/decompose.txt.
std::string_view prompt_name(PromptId id);

/// Prompt templates with `{{placeholder}}` slots. Defaults are compiled in
/// from the repository's prompts/ directory.
class PromptLibrary {
 public:
  PromptLibrary();

  /// Built-ins, replaced by `<dir>/<name>.txt` for every file that exists.
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& text(PromptId id) const { return texts_[static_cast<std::size_t>(id)]; }
  void set(PromptId id, std::string text) { texts_[static_cast<std::size_t>(id)] = std::move(text); }

 private:
  std::array<std::string, kPromptCount> texts_;
};

}  // namespace citywalk
