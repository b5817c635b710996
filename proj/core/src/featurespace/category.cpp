#include "evasion/featurespace/category.hpp"

namespace evasion {
namespace {

struct PrefixEntry {
  std::string_view prefix;
  Category category;
};

constexpr PrefixEntry kPrefixes[] = {
    {"feature", Category::S1},          {"permission", Category::S2},
    {"activity", Category::S3},         {"service_receiver", Category::S3},
    {"provider", Category::S3},         {"intent", Category::S4},
    {"api_call", Category::S5},         {"real_permission", Category::S6},
    {"call", Category::S7},             {"url", Category::S8},
};

constexpr std::string_view kCodes[] = {"S1", "S2", "S3", "S4",
                                       "S5", "S6", "S7", "S8"};

constexpr std::string_view kDescriptions[] = {
    "hardware components", "requested permissions", "app components",
    "filtered intents",    "restricted API calls",  "used permissions",
    "suspicious API calls", "network addresses"};

constexpr std::string_view kCanonical[] = {
    "feature", "permission", "activity", "intent",
    "api_call", "real_permission", "call", "url"};

}  // namespace

std::string_view category_code(Category c) noexcept {
  return kCodes[index_of(c)];
}

std::optional<Category> category_from_code(std::string_view code) noexcept {
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    if (kCodes[i] == code) return kAllCategories[i];
  }
  return std::nullopt;
}

std::string_view category_description(Category c) noexcept {
  return kDescriptions[index_of(c)];
}

std::optional<Category> category_from_prefix(std::string_view prefix) noexcept {
  for (const auto& e : kPrefixes) {
    if (e.prefix == prefix) return e.category;
  }
  return std::nullopt;
}

std::string_view canonical_prefix(Category c) noexcept {
  return kCanonical[index_of(c)];
}

}  // namespace evasion
