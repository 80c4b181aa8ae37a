#include "citywalk/prompts.hpp"

#include <fstream>
#include <sstream>

#include "citywalk/errors.hpp"

namespace citywalk {

// Defined in the generated builtin_prompts.cpp.
std::string_view builtin_prompt_text(std::string_view name);

namespace {

constexpr std::array<std::string_view, kPromptCount> kNames = {
    "decompose", "time_budget",  "start_poi",   "itinerary",
    "baseline",  "judge",        "extract_pois", "poi_description",
};

}  // namespace

std::string_view prompt_name(PromptId id) { return kNames[static_cast<std::size_t>(id)]; }

PromptLibrary::PromptLibrary() {
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    texts_[i] = std::string(builtin_prompt_text(kNames[i]));
  }
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    const auto path = dir / (std::string(kNames[i]) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read prompt template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    lib.texts_[i] = ss.str();
  }
  return lib;
}

}  // namespace citywalk
